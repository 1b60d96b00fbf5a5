//! Finite generating sets for the fixed and periodic points of an
//! endomorphism, and brute-force oracles to check them against.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::alphabet::{IndependenceAlphabet, LetterSet};
use crate::endo::{Endomorphism, DEFAULT_ORBIT_BUDGET};
use crate::error::{Error, Result};
use crate::trace::{sort_traces, Trace};

/// How the periodic exponent `m` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExponentRule {
    /// `m = |A|!`.
    Factorial,
    /// `m = lcm(1, …, |A|)`, which is also a multiple of every permutation
    /// order on `|A|` points.
    Lcm,
}

/// The exponent `m` with `Per φ = Fix φ^m`. Kept symbolic because `|A|!`
/// overflows machine words long before the alphabet limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Exponent {
    pub rule: ExponentRule,
    pub letters: usize,
}

impl Exponent {
    pub fn new(rule: ExponentRule, letters: usize) -> Self {
        Exponent { rule, letters }
    }

    fn factors(&self) -> Vec<u64> {
        match self.rule {
            ExponentRule::Factorial => (2..=self.letters as u64).collect(),
            ExponentRule::Lcm => {
                // Maximal prime powers up to n.
                let n = self.letters as u64;
                let mut out = Vec::new();
                for p in 2..=n {
                    if (2..p).take_while(|d| d * d <= p).any(|d| p % d == 0) {
                        continue;
                    }
                    let mut q = p;
                    while q * p <= n {
                        q *= p;
                    }
                    out.push(q);
                }
                out
            }
        }
    }

    /// The value, when it fits.
    pub fn value(&self) -> Option<u128> {
        self.factors().into_iter().try_fold(1u128, |acc, f| acc.checked_mul(u128::from(f)))
    }

    fn residue(&self, modulus: u64) -> u64 {
        let m = u128::from(modulus);
        self.factors().into_iter().fold(1 % m, |acc, f| acc * u128::from(f) % m) as u64
    }

    fn at_least(&self, bound: u64) -> bool {
        self.value().is_none_or(|v| v >= u128::from(bound))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v}"),
            None => match self.rule {
                ExponentRule::Factorial => write!(f, "{}!", self.letters),
                ExponentRule::Lcm => write!(f, "lcm(1..{})", self.letters),
            },
        }
    }
}

/// One level of the generator recursion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// The alphabet at this level is empty.
    Empty,
    /// Some letters are erased; recurse on the rest and map back.
    Erasing { erased: String, kept: String },
    /// The map permutes the letters.
    Permutation { letters: String },
    /// Recurse on the letters lying on a cycle of the letter map.
    Periodic { letters: String },
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Empty => f.write_str("empty alphabet"),
            Step::Erasing { erased, kept } => write!(f, "erasing {erased}, recurse on {kept}"),
            Step::Permutation { letters } => write!(f, "letter permutation on {letters}"),
            Step::Periodic { letters } => write!(f, "recurse on periodic letters {letters}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSet {
    /// Sorted by length, then FNF text. Never contains the identity.
    pub generators: Vec<Trace>,
    pub provenance: Vec<Step>,
    /// Set for periodic points only.
    pub exponent: Option<Exponent>,
}

/// Letters `a` with `aφ^n = a` for some `n ≥ 1`.
pub fn periodic_letters(phi: &Endomorphism) -> Result<LetterSet> {
    let alphabet = phi.alphabet();
    if let Some(a) = phi.erased_letters().first() {
        return Err(Error::PreconditionViolated(format!("`{}` maps to the identity", alphabet.name(a))));
    }
    let single = |a| {
        let image = phi.image(a);
        (image.len() == 1).then(|| image.cliques()[0].letters().first().expect("one letter"))
    };
    let mut out = LetterSet::EMPTY;
    for a in alphabet.letters() {
        let mut current = a;
        for _ in 0..alphabet.len() {
            match single(current) {
                Some(next) => current = next,
                None => break,
            }
            if current == a {
                out.insert(a);
                break;
            }
        }
    }
    Ok(out)
}

fn lift_all(gens: Vec<Trace>, embedding: &crate::alphabet::Embedding) -> Vec<Trace> {
    gens.iter().map(|g| g.lift(embedding)).collect()
}

fn finish(mut generators: Vec<Trace>, provenance: Vec<Step>, exponent: Option<Exponent>) -> GeneratorSet {
    generators.retain(|g| !g.is_identity());
    sort_traces(&mut generators);
    GeneratorSet {
        generators,
        provenance,
        exponent,
    }
}

/// A finite set generating `Fix φ`.
pub fn fix_generators(phi: &Endomorphism) -> GeneratorSet {
    let mut provenance = Vec::new();
    let generators = fix_rec(phi, &mut provenance);
    finish(generators, provenance, None)
}

fn fix_rec(phi: &Endomorphism, provenance: &mut Vec<Step>) -> Vec<Trace> {
    let alphabet = phi.alphabet();
    if alphabet.is_empty() {
        provenance.push(Step::Empty);
        return Vec::new();
    }
    let erased = phi.erased_letters();
    if !erased.is_empty() {
        let kept = alphabet.all().difference(erased);
        provenance.push(Step::Erasing {
            erased: alphabet.format_set(erased),
            kept: alphabet.format_set(kept),
        });
        let (inner, embedding) = phi.restrict_projected(kept).expect("projection stays inside the kept letters");
        let gens = fix_rec(&inner, provenance);
        return lift_all(gens, &embedding).iter().map(|g| phi.apply_unchecked(g)).collect();
    }
    let periodic = periodic_letters(phi).expect("no erased letters");
    if periodic == alphabet.all() {
        provenance.push(Step::Permutation {
            letters: alphabet.format_set(periodic),
        });
        return alphabet
            .cliques()
            .into_iter()
            .filter(|b| phi.image_content(b.letters()) == b.letters())
            .map(|b| Trace::of_clique(alphabet, b))
            .collect();
    }
    provenance.push(Step::Periodic {
        letters: alphabet.format_set(periodic),
    });
    let (inner, embedding) = phi.restrict(periodic).expect("periodic letters are permuted");
    lift_all(fix_rec(&inner, provenance), &embedding)
}

/// A finite set generating `Per φ`, with the exponent `m` such that every
/// generator `g` satisfies `gφ^m = g`.
pub fn per_generators(phi: &Endomorphism, rule: ExponentRule) -> Result<GeneratorSet> {
    let exponent = Exponent::new(rule, phi.alphabet().len());
    let mut provenance = Vec::new();
    let generators = per_rec(phi, exponent, &mut provenance)?;
    Ok(finish(generators, provenance, Some(exponent)))
}

fn per_rec(phi: &Endomorphism, m: Exponent, provenance: &mut Vec<Step>) -> Result<Vec<Trace>> {
    let alphabet = phi.alphabet();
    if alphabet.is_empty() {
        provenance.push(Step::Empty);
        return Ok(Vec::new());
    }
    let erased = phi.erased_letters();
    if !erased.is_empty() {
        let kept = alphabet.all().difference(erased);
        provenance.push(Step::Erasing {
            erased: alphabet.format_set(erased),
            kept: alphabet.format_set(kept),
        });
        let (inner, embedding) = phi.restrict_projected(kept).expect("projection stays inside the kept letters");
        let gens = per_rec(&inner, m, provenance)?;
        return lift_all(gens, &embedding).iter().map(|g| iterate_to_exponent(phi, g, m)).collect();
    }
    let periodic = periodic_letters(phi)?;
    if periodic == alphabet.all() {
        provenance.push(Step::Permutation {
            letters: alphabet.format_set(periodic),
        });
        return Ok(alphabet.letters().map(|a| Trace::letter(alphabet, a)).collect());
    }
    provenance.push(Step::Periodic {
        letters: alphabet.format_set(periodic),
    });
    let (inner, embedding) = phi.restrict(periodic).expect("periodic letters are permuted");
    Ok(lift_all(per_rec(&inner, m, provenance)?, &embedding))
}

/// `uφ^m` by orbit cycle detection.
pub(crate) fn iterate_to_exponent(phi: &Endomorphism, u: &Trace, m: Exponent) -> Result<Trace> {
    let mut orbit = vec![u.clone()];
    let mut seen: HashMap<Trace, u64> = HashMap::from([(u.clone(), 0)]);
    loop {
        let step = orbit.len() as u64;
        if !m.at_least(step) {
            // m is small enough to have been reached already.
            let m = m.value().expect("small exponent") as usize;
            return Ok(orbit[m].clone());
        }
        let next = phi.apply_unchecked(orbit.last().expect("orbit is nonempty"));
        if next.len() > DEFAULT_ORBIT_BUDGET {
            return Err(Error::OrbitGrowth(DEFAULT_ORBIT_BUDGET));
        }
        if let Some(&start) = seen.get(&next) {
            // m ≥ step > start, so m reduces onto the cycle.
            let period = step - start;
            let shifted = (m.residue(period) + period - start % period) % period;
            return Ok(orbit[(start + shifted) as usize].clone());
        }
        seen.insert(next.clone(), step);
        orbit.push(next);
    }
}

/// Every trace of length at most `maxlen`, shortest first.
pub fn all_traces(alphabet: &Arc<IndependenceAlphabet>, maxlen: usize) -> Vec<Trace> {
    let mut out = vec![Trace::identity(alphabet)];
    let mut layer = out.clone();
    for _ in 0..maxlen {
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for u in &layer {
            for a in alphabet.letters() {
                let v = u.concat(&Trace::letter(alphabet, a));
                if seen.insert(v.clone()) {
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    sort_traces(&mut out);
    out
}

/// Traces `u` with `|u| ≤ maxlen` and `uφ = u`.
pub fn fix_oracle(phi: &Endomorphism, maxlen: usize) -> Vec<Trace> {
    all_traces(phi.alphabet(), maxlen)
        .into_iter()
        .filter(|u| phi.apply_unchecked(u) == *u)
        .collect()
}

/// Traces `u` with `|u| ≤ maxlen` and `uφ^n = u` for some `1 ≤ n ≤ maxexp`.
pub fn per_oracle(phi: &Endomorphism, maxlen: usize, maxexp: u64) -> Vec<Trace> {
    all_traces(phi.alphabet(), maxlen)
        .into_iter()
        .filter(|u| {
            let mut v = u.clone();
            for _ in 0..maxexp {
                v = phi.apply_unchecked(&v);
                if v == *u {
                    return true;
                }
                // Lengths never shrink back once every letter survives, but
                // erasing maps can shrink; only stop on blow-up.
                if v.len() > DEFAULT_ORBIT_BUDGET {
                    return false;
                }
            }
            false
        })
        .collect()
}

/// Elements of the submonoid generated by `gens` of length at most `maxlen`.
pub fn submonoid_ball(alphabet: &Arc<IndependenceAlphabet>, gens: &[Trace], maxlen: usize) -> Result<Vec<Trace>> {
    if gens.iter().any(Trace::is_identity) {
        return Err(Error::TrivialGenerator);
    }
    let identity = Trace::identity(alphabet);
    let mut seen: HashSet<Trace> = HashSet::from([identity.clone()]);
    let mut frontier = vec![identity];
    while let Some(u) = frontier.pop() {
        for g in gens {
            if u.len() + g.len() > maxlen {
                continue;
            }
            let v = u.multiply(g)?;
            if seen.insert(v.clone()) {
                frontier.push(v);
            }
        }
    }
    let mut out: Vec<Trace> = seen.into_iter().collect();
    sort_traces(&mut out);
    Ok(out)
}

/// Drops generators that are products of the remaining ones. Longest
/// generators are tried first.
pub fn reduce(set: &GeneratorSet) -> GeneratorSet {
    let mut gens = set.generators.clone();
    let mut i = gens.len();
    while i > 0 {
        i -= 1;
        let g = gens[i].clone();
        let others: Vec<Trace> = gens.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, t)| t.clone()).collect();
        let ball = submonoid_ball(g.alphabet(), &others, g.len()).expect("generators are nontrivial");
        if ball.contains(&g) {
            gens.remove(i);
        }
    }
    GeneratorSet {
        generators: gens,
        provenance: set.provenance.clone(),
        exponent: set.exponent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha(letters: &[&str], pairs: &[(&str, &str)]) -> Arc<IndependenceAlphabet> {
        Arc::new(IndependenceAlphabet::new(letters, pairs).unwrap())
    }

    fn texts(traces: &[Trace]) -> Vec<String> {
        traces.iter().map(Trace::to_string).collect()
    }

    fn letters(alphabet: &IndependenceAlphabet, names: &str) -> LetterSet {
        names.chars().map(|c| alphabet.letter(&c.to_string()).unwrap()).collect()
    }

    #[test]
    fn periodic_letter_examples() {
        let a = alpha(&["a", "b", "c"], &[("a", "b")]);
        let phi = Endomorphism::from_words(&a, &["b", "a", "ab"]).unwrap();
        assert_eq!(periodic_letters(&phi).unwrap(), letters(&a, "ab"));
        assert_eq!(periodic_letters(&Endomorphism::identity(&a)).unwrap(), a.all());
        let ab = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::from_words(&ab, &["b", "b"]).unwrap();
        assert_eq!(periodic_letters(&phi).unwrap(), letters(&ab, "b"));
        let phi = Endomorphism::from_words(&ab, &["", "b"]).unwrap();
        assert!(matches!(periodic_letters(&phi), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn fix_examples() {
        let a = alpha(&["a", "b", "c"], &[("a", "b")]);
        let swap = Endomorphism::from_words(&a, &["b", "a", "c"]).unwrap();
        let fix = fix_generators(&swap);
        assert_eq!(texts(&fix.generators), ["{c}", "{a,b}"]);
        assert_eq!(fix_oracle(&swap, 6), submonoid_ball(&a, &fix.generators, 6).unwrap());

        let id = fix_generators(&Endomorphism::identity(&a));
        assert_eq!(texts(&id.generators), ["{a}", "{b}", "{c}", "{a,b}"]);

        let free = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::from_words(&free, &["", "ab"]).unwrap();
        let fix = fix_generators(&phi);
        assert_eq!(texts(&fix.generators), ["{a}{b}"]);
        assert_eq!(fix_oracle(&phi, 6), submonoid_ball(&free, &fix.generators, 6).unwrap());
        assert!(matches!(fix.provenance[0], Step::Erasing { .. }));
    }

    #[test]
    fn per_examples() {
        let a = alpha(&["a", "b", "c"], &[("a", "b")]);
        let phi = Endomorphism::from_words(&a, &["b", "a", "ab"]).unwrap();
        let per = per_generators(&phi, ExponentRule::Factorial).unwrap();
        assert_eq!(texts(&per.generators), ["{a}", "{b}"]);
        assert_eq!(per.exponent.unwrap().to_string(), "6");
        assert_eq!(per_oracle(&phi, 6, 6), submonoid_ball(&a, &per.generators, 6).unwrap());

        let per = per_generators(&Endomorphism::identity(&a), ExponentRule::Factorial).unwrap();
        assert_eq!(texts(&per.generators), ["{a}", "{b}", "{c}"]);

        let free = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::from_words(&free, &["", "ab"]).unwrap();
        let per = per_generators(&phi, ExponentRule::Factorial).unwrap();
        assert_eq!(texts(&per.generators), ["{a}{b}"]);
        assert_eq!(per_oracle(&phi, 6, 4), submonoid_ball(&free, &per.generators, 6).unwrap());
    }

    #[test]
    fn exponents() {
        assert_eq!(Exponent::new(ExponentRule::Factorial, 5).value(), Some(120));
        assert_eq!(Exponent::new(ExponentRule::Lcm, 6).value(), Some(60));
        assert_eq!(Exponent::new(ExponentRule::Lcm, 0).value(), Some(1));
        let huge = Exponent::new(ExponentRule::Factorial, 40);
        assert_eq!(huge.value(), None);
        assert_eq!(huge.to_string(), "40!");
        assert_eq!(huge.residue(7), 0);
        assert_eq!(Exponent::new(ExponentRule::Factorial, 4).residue(5), 4);
    }

    #[test]
    fn iterating_to_the_exponent() {
        let free = alpha(&["a", "b", "c"], &[]);
        let rotate = Endomorphism::from_words(&free, &["b", "c", "a"]).unwrap();
        let a = Trace::parse(&free, "a").unwrap();
        for n in 0..8 {
            for rule in [ExponentRule::Factorial, ExponentRule::Lcm] {
                let m = Exponent::new(rule, n);
                let want = rotate.iterate_apply(&a, m.value().unwrap() as u64).unwrap();
                assert_eq!(iterate_to_exponent(&rotate, &a, m).unwrap(), want);
            }
        }
        let huge = Exponent::new(ExponentRule::Factorial, 50);
        assert_eq!(iterate_to_exponent(&rotate, &a, huge).unwrap(), a);
        let shift = Endomorphism::from_words(&free, &["", "a", "b"]).unwrap();
        let c = Trace::parse(&free, "c").unwrap();
        assert!(iterate_to_exponent(&shift, &c, huge).unwrap().is_identity());
    }

    #[test]
    fn oracle_examples() {
        let free = alpha(&["a", "b"], &[]);
        let all = fix_oracle(&Endomorphism::identity(&free), 2);
        assert_eq!(all.len(), 7);
        let comm = alpha(&["a", "b"], &[("a", "b")]);
        let swap = Endomorphism::from_words(&comm, &["b", "a"]).unwrap();
        assert_eq!(texts(&fix_oracle(&swap, 2)), ["{}", "{a,b}"]);
        assert_eq!(fix_oracle(&swap, 0).len(), 1);
    }

    #[test]
    fn submonoid_balls() {
        let free = alpha(&["a", "b"], &[]);
        let ab = Trace::parse(&free, "ab").unwrap();
        assert_eq!(texts(&submonoid_ball(&free, &[ab], 4).unwrap()), ["{}", "{a}{b}", "{a}{b}{a}{b}"]);
        assert_eq!(submonoid_ball(&free, &[], 4).unwrap().len(), 1);
        let gens = [Trace::parse(&free, "a").unwrap(), Trace::parse(&free, "b").unwrap()];
        assert_eq!(submonoid_ball(&free, &gens, 1).unwrap().len(), 3);
        let one = Trace::identity(&free);
        assert_eq!(submonoid_ball(&free, &[one], 3), Err(Error::TrivialGenerator));
    }

    #[test]
    fn reduction() {
        let a = alpha(&["a", "b", "c"], &[("a", "b")]);
        let id = fix_generators(&Endomorphism::identity(&a));
        let reduced = reduce(&id);
        assert_eq!(texts(&reduced.generators), ["{a}", "{b}", "{c}"]);
    }
}
