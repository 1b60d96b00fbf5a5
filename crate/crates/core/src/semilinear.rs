//! Semilinear sets of natural vectors and the natural solutions of affine
//! systems `x = c + Mx`.
//!
//! Minimal solutions are found with the Contejean–Devie completion: starting
//! from the unit vectors, a non-solution `x` is only extended along a unit
//! vector `e_j` when the defect `Ax` and the column `Ae_j` point in opposite
//! directions (`⟨Ax, Ae_j⟩ < 0`), and candidates that dominate a solution
//! already found are dropped. The search terminates and returns exactly the
//! componentwise-minimal nonzero solutions.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::Hash;

use num_traits::{PrimInt, Unsigned};

use crate::error::{Error, Result};

/// Scalar type for semilinear vectors.
pub trait Natural: PrimInt + Unsigned + Hash + fmt::Debug + fmt::Display + Send + Sync + 'static {}

impl<T> Natural for T where T: PrimInt + Unsigned + Hash + fmt::Debug + fmt::Display + Send + Sync + 'static {}

fn widen<N: Natural>(x: N) -> i128 {
    x.to_i128().expect("natural fits in i128")
}

fn narrow<N: Natural>(x: u64) -> N {
    N::from(x).expect("solution coordinate overflows the scalar type")
}

/// `offset + ℕ·periods`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Linear<N> {
    pub offset: Vec<N>,
    pub periods: Vec<Vec<N>>,
}

/// A finite union of linear sets, all of the same dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemilinearSet<N = u64> {
    dimension: usize,
    components: Vec<Linear<N>>,
}

impl<N: Natural> SemilinearSet<N> {
    pub fn empty(dimension: usize) -> Self {
        SemilinearSet {
            dimension,
            components: Vec::new(),
        }
    }

    /// All of `ℕ^dimension`.
    pub fn all(dimension: usize) -> Self {
        let periods = (0..dimension)
            .map(|i| (0..dimension).map(|j| if i == j { N::one() } else { N::zero() }).collect())
            .collect();
        SemilinearSet {
            dimension,
            components: vec![Linear {
                offset: vec![N::zero(); dimension],
                periods,
            }],
        }
    }

    /// Builds a set from components, checking dimensions and dropping zero
    /// or repeated periods.
    pub fn new(dimension: usize, components: Vec<Linear<N>>) -> Result<Self> {
        let mut out = Vec::with_capacity(components.len());
        for mut c in components {
            if c.offset.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: c.offset.len(),
                });
            }
            if let Some(p) = c.periods.iter().find(|p| p.len() != dimension) {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: p.len(),
                });
            }
            c.periods.retain(|p| p.iter().any(|x| !x.is_zero()));
            c.periods.sort();
            c.periods.dedup();
            out.push(c);
        }
        Ok(SemilinearSet {
            dimension,
            components: out,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn components(&self) -> &[Linear<N>] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// True when the set has finitely many members.
    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.periods.is_empty())
    }

    pub fn contains(&self, x: &[N]) -> Result<bool> {
        self.check_dimension(x.len())?;
        Ok(self.components.iter().any(|c| {
            let rest: Option<Vec<i128>> = x
                .iter()
                .zip(&c.offset)
                .map(|(&xi, &oi)| {
                    let d = widen(xi) - widen(oi);
                    (d >= 0).then_some(d)
                })
                .collect();
            match rest {
                Some(rest) => {
                    let periods: Vec<Vec<i128>> = c.periods.iter().map(|p| p.iter().map(|&v| widen(v)).collect()).collect();
                    cone_contains(&periods, rest, 0, &mut HashMap::new())
                }
                None => false,
            }
        }))
    }

    /// Members with every coordinate at most `bound`.
    pub fn enumerate(&self, bound: N) -> BTreeSet<Vec<N>> {
        self.enumerate_box(&vec![bound; self.dimension])
    }

    /// Members bounded coordinatewise by `upper`.
    pub fn enumerate_box(&self, upper: &[N]) -> BTreeSet<Vec<N>> {
        let mut out = BTreeSet::new();
        if upper.len() != self.dimension {
            return out;
        }
        let fits = |v: &[N]| v.iter().zip(upper).all(|(x, u)| x <= u);
        for c in &self.components {
            if !fits(&c.offset) {
                continue;
            }
            let mut seen = HashSet::new();
            let mut stack = vec![c.offset.clone()];
            seen.insert(c.offset.clone());
            while let Some(v) = stack.pop() {
                for p in &c.periods {
                    let next: Option<Vec<N>> = v.iter().zip(p).map(|(&x, &y)| x.checked_add(&y)).collect();
                    if let Some(next) = next {
                        if fits(&next) && seen.insert(next.clone()) {
                            stack.push(next);
                        }
                    }
                }
            }
            out.extend(seen);
        }
        out
    }

    fn check_dimension(&self, got: usize) -> Result<()> {
        if got == self.dimension {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dimension,
                got,
            })
        }
    }
}

/// Is `target` a natural combination of `periods[from..]`?
fn cone_contains(periods: &[Vec<i128>], target: Vec<i128>, from: usize, memo: &mut HashMap<(Vec<i128>, usize), bool>) -> bool {
    if target.iter().all(|&x| x == 0) {
        return true;
    }
    if from == periods.len() {
        return false;
    }
    if let Some(&known) = memo.get(&(target.clone(), from)) {
        return known;
    }
    let p = &periods[from];
    let mut current = target.clone();
    let mut found = false;
    loop {
        if cone_contains(periods, current.clone(), from + 1, memo) {
            found = true;
            break;
        }
        let mut next = current.clone();
        for (x, &y) in next.iter_mut().zip(p) {
            *x -= y;
        }
        if next.iter().any(|&x| x < 0) {
            break;
        }
        current = next;
    }
    memo.insert((target, from), found);
    found
}

fn write_vector<N: fmt::Display>(f: &mut fmt::Formatter<'_>, v: &[N]) -> fmt::Result {
    f.write_str("(")?;
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str(")")
}

impl<N: Natural> fmt::Display for Linear<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("base ")?;
        write_vector(f, &self.offset)?;
        f.write_str(" + periods {")?;
        for (i, p) in self.periods.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write_vector(f, p)?;
        }
        f.write_str("}")
    }
}

/// `∅`, or components joined by ` ∪ `.
impl<N: Natural> fmt::Display for SemilinearSet<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return f.write_str("∅");
        }
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Minimal nonzero natural solutions of `Σ_j x_j·columns[j] = 0`, where
/// variable `j` may not exceed `caps[j]` when a cap is given.
fn minimal_solutions(columns: &[Vec<i128>], caps: &[Option<u64>]) -> Vec<Vec<u64>> {
    let vars = columns.len();
    let rows = columns.first().map_or(0, Vec::len);
    let dot = |x: &[i128], y: &[i128]| -> i128 { x.iter().zip(y).map(|(a, b)| a * b).sum() };

    let mut solutions: Vec<Vec<u64>> = Vec::new();
    let mut frontier: Vec<(Vec<u64>, Vec<i128>)> = (0..vars)
        .filter(|&j| caps[j] != Some(0))
        .map(|j| {
            let mut x = vec![0; vars];
            x[j] = 1;
            (x, columns[j].clone())
        })
        .collect();

    while !frontier.is_empty() {
        let mut pending = Vec::new();
        for (x, defect) in frontier {
            if defect.iter().all(|&d| d == 0) {
                solutions.push(x);
            } else {
                pending.push((x, defect));
            }
        }
        let mut next = Vec::new();
        let mut seen = HashSet::new();
        for (x, defect) in &pending {
            for j in 0..vars {
                if caps[j].is_some_and(|cap| x[j] >= cap) || dot(defect, &columns[j]) >= 0 {
                    continue;
                }
                let mut y = x.clone();
                y[j] += 1;
                if solutions.iter().any(|s| s.iter().zip(&y).all(|(a, b)| a <= b)) {
                    continue;
                }
                if seen.insert(y.clone()) {
                    let moved: Vec<i128> = (0..rows).map(|r| defect[r] + columns[j][r]).collect();
                    next.push((y, moved));
                }
            }
        }
        frontier = next;
    }
    solutions.sort();
    solutions
}

fn check_square<N: Natural>(m: &[Vec<N>]) -> Result<usize> {
    let k = m.len();
    match m.iter().find(|row| row.len() != k) {
        Some(row) => Err(Error::DimensionMismatch {
            expected: k,
            got: row.len(),
        }),
        None => Ok(k),
    }
}

/// Columns of `M - I`.
fn defect_columns<N: Natural>(m: &[Vec<N>]) -> Vec<Vec<i128>> {
    let k = m.len();
    (0..k)
        .map(|t| (0..k).map(|i| widen(m[i][t]) - i128::from(i == t)).collect())
        .collect()
}

/// Minimal nonzero natural solutions of `x = Mx` for a square natural matrix.
pub fn hilbert_basis<N: Natural>(m: &[Vec<N>]) -> Result<Vec<Vec<N>>> {
    let k = check_square(m)?;
    let columns = defect_columns(m);
    Ok(minimal_solutions(&columns, &vec![None; k])
        .into_iter()
        .map(|s| s.into_iter().map(narrow).collect())
        .collect())
}

/// All natural solutions of `x = c + Mx`: the minimal solutions as offsets,
/// each with the Hilbert basis of `x = Mx` as periods.
pub fn solve_affine_nat<N: Natural>(m: &[Vec<N>], c: &[N]) -> Result<SemilinearSet<N>> {
    let k = check_square(m)?;
    if c.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: c.len(),
        });
    }
    // Homogenize with a leading variable of column c capped at 1.
    let mut columns = vec![c.iter().map(|&x| widen(x)).collect::<Vec<_>>()];
    columns.extend(defect_columns(m));
    let mut caps = vec![None; k + 1];
    caps[0] = Some(1);
    let mut offsets = Vec::new();
    let mut periods = Vec::new();
    for s in minimal_solutions(&columns, &caps) {
        let v: Vec<N> = s[1..].iter().map(|&x| narrow(x)).collect();
        if s[0] == 1 {
            offsets.push(v);
        } else {
            periods.push(v);
        }
    }
    SemilinearSet::new(
        k,
        offsets
            .into_iter()
            .map(|offset| Linear {
                offset,
                periods: periods.clone(),
            })
            .collect(),
    )
}
