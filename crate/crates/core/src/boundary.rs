//! Real traces, the continuous extension `Φ` of a uniformly continuous
//! endomorphism, and mp-rational descriptions of `Fix Φ` over clique-union
//! alphabets.
//!
//! Boundary points come in the shapes the fixed-point description needs:
//! `u·p^ω`, `u·lim wφ^n` (with `w ≤_p wφ`), and images of those under a
//! further endomorphism. Each is an increasing chain of finite traces, and
//! its FNF is produced lazily: a clique at height `h` is final once every
//! letter that can still occur would land above `h`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::alphabet::{Clique, IndependenceAlphabet, Letter, LetterSet};
use crate::endo::Endomorphism;
use crate::error::{Error, Result};
use crate::fixpoints::{fix_generators, submonoid_ball};
use crate::semilinear::solve_affine_nat;
use crate::trace::{same_alphabet, sort_traces, FnfBuilder, Trace};
use crate::SemilinearSet;

/// Default cap on the number of letters materialized by [`RealTrace::fnf_prefix`].
pub const DEFAULT_LETTER_BUDGET: usize = 1 << 20;

/// A point of the completion: a finite trace or a boundary point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RealTrace {
    Finite(Trace),
    Infinite(InfiniteTrace),
}

/// `head · tail`, where the tail is one of the supported infinite shapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfiniteTrace {
    head: Trace,
    tail: Tail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tail {
    /// `p^ω`, `p ≠ 1`.
    Periodic(Trace),
    /// `lim base·φ^n = base · seed · seedφ · seedφ² ⋯` where `baseφ = base·seed`.
    Iterate { endo: Endomorphism, base: Trace, seed: Trace },
    /// `XΦ` for a uniformly continuous `endo`.
    Image { endo: Endomorphism, source: Box<InfiniteTrace> },
}

/// Contents `S_j` of `seedφ^j`; eventually periodic.
struct ContentOrbit {
    cycle_start: usize,
    /// `suffix[j]` is the union of `S_i` over `i ≥ j`, up to the end of the first cycle.
    suffix: Vec<LetterSet>,
}

impl ContentOrbit {
    fn new(endo: &Endomorphism, start: LetterSet) -> Self {
        let mut sets = Vec::new();
        let mut index = HashMap::new();
        let mut s = start;
        let cycle_start = loop {
            if let Some(&i) = index.get(&s) {
                break i;
            }
            index.insert(s, sets.len());
            sets.push(s);
            s = endo.image_content(s);
        };
        let mut suffix = vec![LetterSet::EMPTY; sets.len() + 1];
        for i in (0..sets.len()).rev() {
            suffix[i] = suffix[i + 1].union(sets[i]);
        }
        ContentOrbit { cycle_start, suffix }
    }

    fn future_from(&self, j: usize) -> LetterSet {
        self.suffix[j.min(self.cycle_start)]
    }

    fn recurring(&self) -> LetterSet {
        self.suffix[self.cycle_start]
    }
}

/// Emits the increments of a tail.
enum Cursor<'a> {
    Periodic {
        word: Vec<Letter>,
        content: LetterSet,
    },
    Iterate {
        endo: &'a Endomorphism,
        base: Option<Vec<Letter>>,
        base_content: LetterSet,
        current: Trace,
        step: usize,
        orbit: ContentOrbit,
    },
    Image {
        endo: &'a Endomorphism,
        inner: Box<Cursor<'a>>,
    },
    /// Emits `head` once, then defers to `inner`.
    Lead {
        head: Option<Vec<Letter>>,
        head_content: LetterSet,
        inner: Box<Cursor<'a>>,
    },
}

impl<'a> Cursor<'a> {
    fn new(tail: &'a Tail) -> Self {
        match tail {
            Tail::Periodic(p) => Cursor::Periodic {
                word: p.word(),
                content: p.content(),
            },
            Tail::Iterate { endo, base, seed } => Cursor::Iterate {
                endo,
                base: Some(base.word()),
                base_content: base.content(),
                current: seed.clone(),
                step: 0,
                orbit: ContentOrbit::new(endo, seed.content()),
            },
            Tail::Image { endo, source } => {
                let inner = Cursor::Lead {
                    head: Some(source.head.word()),
                    head_content: source.head.content(),
                    inner: Box::new(Cursor::new(&source.tail)),
                };
                Cursor::Image {
                    endo,
                    inner: Box::new(inner),
                }
            }
        }
    }

    /// Letters occurring in some increment not yet emitted.
    fn future(&self) -> LetterSet {
        match self {
            Cursor::Periodic { content, .. } => *content,
            Cursor::Iterate {
                base,
                base_content,
                step,
                orbit,
                ..
            } => {
                let later = orbit.future_from(*step);
                if base.is_some() {
                    later.union(*base_content)
                } else {
                    later
                }
            }
            Cursor::Image { endo, inner } => endo.image_content(inner.future()),
            Cursor::Lead {
                head,
                head_content,
                inner,
            } => {
                if head.is_some() {
                    inner.future().union(*head_content)
                } else {
                    inner.future()
                }
            }
        }
    }

    fn next(&mut self) -> Vec<Letter> {
        match self {
            Cursor::Periodic { word, .. } => word.clone(),
            Cursor::Iterate {
                endo,
                base,
                current,
                step,
                ..
            } => {
                if let Some(word) = base.take() {
                    return word;
                }
                let out = current.word();
                *current = endo.apply_unchecked(current);
                *step += 1;
                out
            }
            Cursor::Image { endo, inner } => inner
                .next()
                .into_iter()
                .flat_map(|a| endo.image(a).word())
                .collect(),
            Cursor::Lead { head, inner, .. } => head.take().unwrap_or_else(|| inner.next()),
        }
    }
}

impl Tail {
    fn recurring(&self) -> LetterSet {
        match self {
            Tail::Periodic(p) => p.content(),
            Tail::Iterate { endo, seed, .. } => ContentOrbit::new(endo, seed.content()).recurring(),
            Tail::Image { endo, source } => endo.image_content(source.tail.recurring()),
        }
    }
}

impl InfiniteTrace {
    /// `prefix · period^ω`.
    pub fn eventually_periodic(prefix: &Trace, period: &Trace) -> Result<Self> {
        if !same_alphabet(prefix.alphabet(), period.alphabet()) {
            return Err(Error::AlphabetMismatch);
        }
        if period.is_identity() {
            return Err(Error::PreconditionViolated("period is the identity".into()));
        }
        Ok(InfiniteTrace {
            head: prefix.clone(),
            tail: Tail::Periodic(period.clone()),
        })
    }

    /// `lim base·φ^n`. Needs `base <_p baseφ` and a quotient whose letters
    /// never all vanish under iteration.
    pub fn iterate_limit(endo: &Endomorphism, base: &Trace) -> Result<Self> {
        if !same_alphabet(endo.alphabet(), base.alphabet()) {
            return Err(Error::AlphabetMismatch);
        }
        let image = endo.apply_unchecked(base);
        let seed = base.cancel_from(&image).ok_or(Error::NotAPrefix)?;
        if ContentOrbit::new(endo, seed.content()).recurring().is_empty() {
            return Err(Error::PreconditionViolated("the iterates of the base stop growing".into()));
        }
        Ok(InfiniteTrace {
            head: Trace::identity(base.alphabet()),
            tail: Tail::Iterate {
                endo: endo.clone(),
                base: base.clone(),
                seed,
            },
        })
    }

    pub fn alphabet(&self) -> &Arc<IndependenceAlphabet> {
        self.head.alphabet()
    }

    /// Letters occurring infinitely often.
    pub fn recurring_letters(&self) -> LetterSet {
        self.tail.recurring()
    }

    pub fn fnf_prefix(&self, n: usize) -> Result<Trace> {
        self.fnf_prefix_with_budget(n, DEFAULT_LETTER_BUDGET)
    }

    /// The first `n` FNF cliques, materializing at most `budget` letters.
    pub fn fnf_prefix_with_budget(&self, n: usize, budget: usize) -> Result<Trace> {
        let mut builder = FnfBuilder::from_trace(&self.head);
        let mut cursor = Cursor::new(&self.tail);
        while builder.settled_depth(cursor.future()) < n {
            builder.extend(cursor.next());
            if builder.len() > budget {
                return Err(Error::BudgetExceeded(budget));
            }
        }
        Ok(builder.finish().truncate(n))
    }
}


impl RealTrace {
    pub fn alphabet(&self) -> &Arc<IndependenceAlphabet> {
        match self {
            RealTrace::Finite(u) => u.alphabet(),
            RealTrace::Infinite(x) => x.alphabet(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, RealTrace::Finite(_))
    }

    /// The first `n` FNF cliques (all of them for a short finite trace).
    pub fn fnf_prefix(&self, n: usize) -> Result<Trace> {
        match self {
            RealTrace::Finite(u) => Ok(u.truncate(n)),
            RealTrace::Infinite(x) => x.fnf_prefix(n),
        }
    }

    /// Do the first `n` FNF cliques agree?
    pub fn equal_to_depth(&self, other: &RealTrace, n: usize) -> Result<bool> {
        Ok(self.fnf_prefix(n)? == other.fnf_prefix(n)?)
    }

    /// `(head, period)`, with the identity period for finite traces.
    fn periodic_parts(&self) -> Option<(&Trace, Option<&Trace>)> {
        match self {
            RealTrace::Finite(u) => Some((u, None)),
            RealTrace::Infinite(InfiniteTrace {
                head,
                tail: Tail::Periodic(p),
            }) => Some((head, Some(p))),
            RealTrace::Infinite(_) => None,
        }
    }

    /// Exact equality of finite and eventually periodic points, by comparing
    /// projections onto every dependent pair of letters. `None` for other
    /// shapes.
    pub fn exact_eq(&self, other: &RealTrace) -> Option<bool> {
        let (x1, y1) = self.periodic_parts()?;
        let (x2, y2) = other.periodic_parts()?;
        if !same_alphabet(self.alphabet(), other.alphabet()) {
            return Some(false);
        }
        let alphabet = self.alphabet();
        let words = |t: Option<&Trace>| t.map(Trace::word).unwrap_or_default();
        let (w1, p1, w2, p2) = (x1.word(), words(y1), x2.word(), words(y2));
        for (a, b) in alphabet.dependent_pairs() {
            let keep = LetterSet::from_iter([a, b]);
            let project = |w: &[Letter]| -> Vec<Letter> { w.iter().copied().filter(|&c| keep.contains(c)).collect() };
            if !ultimately_periodic_eq((&project(&w1), &project(&p1)), (&project(&w2), &project(&p2))) {
                return Some(false);
            }
        }
        Some(true)
    }
}

/// Equality of the words `x·y^ω` (just `x` when `y` is empty).
fn ultimately_periodic_eq((x1, y1): (&[Letter], &[Letter]), (x2, y2): (&[Letter], &[Letter])) -> bool {
    match (y1.is_empty(), y2.is_empty()) {
        (true, true) => x1 == x2,
        (false, false) => {
            let n = x1.len().max(x2.len()) + y1.len() + y2.len();
            let at = |x: &[Letter], y: &[Letter], i: usize| if i < x.len() { x[i] } else { y[(i - x.len()) % y.len()] };
            (0..n).all(|i| at(x1, y1, i) == at(x2, y2, i))
        }
        _ => false,
    }
}

/// `u^ω`; the identity when `u = 1`.
pub fn omega_power(u: &Trace) -> RealTrace {
    if u.is_identity() {
        RealTrace::Finite(u.clone())
    } else {
        RealTrace::Infinite(InfiniteTrace {
            head: Trace::identity(u.alphabet()),
            tail: Tail::Periodic(u.clone()),
        })
    }
}

/// `u·X`.
pub fn mixed_product(u: &Trace, x: &RealTrace) -> Result<RealTrace> {
    if !same_alphabet(u.alphabet(), x.alphabet()) {
        return Err(Error::AlphabetMismatch);
    }
    Ok(match x {
        RealTrace::Finite(v) => RealTrace::Finite(u.concat(v)),
        RealTrace::Infinite(x) => RealTrace::Infinite(InfiniteTrace {
            head: u.concat(&x.head),
            tail: x.tail.clone(),
        }),
    })
}

/// `XΦ` for the continuous extension `Φ` of a uniformly continuous `φ`.
pub fn apply_extension(phi: &Endomorphism, x: &RealTrace) -> Result<RealTrace> {
    phi.require_uniformly_continuous()?;
    if !same_alphabet(phi.alphabet(), x.alphabet()) {
        return Err(Error::AlphabetMismatch);
    }
    let x = match x {
        RealTrace::Finite(u) => return Ok(RealTrace::Finite(phi.apply_unchecked(u))),
        RealTrace::Infinite(x) => x,
    };
    let head = phi.apply_unchecked(&x.head);
    let tail = match &x.tail {
        Tail::Periodic(p) => {
            let q = phi.apply_unchecked(p);
            if q.is_identity() {
                return Ok(RealTrace::Finite(head));
            }
            Tail::Periodic(q)
        }
        // lim wφ^n is fixed by Φ.
        Tail::Iterate { endo, .. } if endo == phi => x.tail.clone(),
        Tail::Image { endo, source } => Tail::Image {
            endo: endo.compose(phi)?,
            source: source.clone(),
        },
        Tail::Iterate { .. } => Tail::Image {
            endo: phi.clone(),
            source: Box::new(InfiniteTrace {
                head: Trace::identity(phi.alphabet()),
                tail: x.tail.clone(),
            }),
        },
    };
    if !tail.recurring().is_empty() {
        return Ok(RealTrace::Infinite(InfiniteTrace { head, tail }));
    }
    // Every recurring letter is erased: the image is finite.
    let mut builder = FnfBuilder::from_trace(&head);
    let mut cursor = Cursor::new(&tail);
    while !cursor.future().is_empty() {
        builder.extend(cursor.next());
        if builder.len() > DEFAULT_LETTER_BUDGET {
            return Err(Error::BudgetExceeded(DEFAULT_LETTER_BUDGET));
        }
    }
    Ok(RealTrace::Finite(builder.finish()))
}

/// `fnf_prefix(X, n) = fnf_prefix(Y, n)`.
pub fn equal_to_depth(x: &RealTrace, y: &RealTrace, n: usize) -> Result<bool> {
    x.equal_to_depth(y, n)
}

/// How `w_Bφ^n` behaves for a clique `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LimitClass {
    /// `w_Bφ = w_B`.
    Fixed,
    /// `w_B` is not a prefix of `w_Bφ`.
    NotExtending,
    /// `w_Bφ = w_B z` and `zφ^k` lies in component `component` for all
    /// `k ≥ steps`, with `steps` least.
    Stabilizes {
        component: usize,
        steps: usize,
        quotient: Trace,
    },
    /// `w_Bφ = w_B z` and the components met by `zφ^k` never settle on a
    /// single one.
    Diverges { quotient: Trace, limit: InfiniteTrace },
}

/// Components as bitmasks over component indices, and the component image
/// map `κ`.
struct ComponentMap {
    components: Vec<LetterSet>,
    kappa: Vec<u64>,
}

impl ComponentMap {
    fn new(phi: &Endomorphism) -> Result<Self> {
        let alphabet = phi.alphabet();
        let components = alphabet.connected_components();
        let mut map = ComponentMap {
            components,
            kappa: Vec::new(),
        };
        for i in 0..map.components.len() {
            let mut images = map.components[i].iter().map(|a| map.mask(phi.image(a).content()));
            let first = images.next().expect("components are nonempty");
            if images.any(|m| m != first) {
                return Err(Error::PreconditionViolated(format!(
                    "letters of component {} meet different components",
                    alphabet.format_set(map.components[i])
                )));
            }
            map.kappa.push(first);
        }
        Ok(map)
    }

    fn mask(&self, content: LetterSet) -> u64 {
        self.components
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.intersection(content).is_empty())
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    fn step(&self, r: u64) -> u64 {
        (0..self.components.len()).filter(|i| r >> i & 1 == 1).fold(0, |m, i| m | self.kappa[i])
    }
}

fn require_limit_preconditions(phi: &Endomorphism) -> Result<ComponentMap> {
    let alphabet = phi.alphabet();
    if !alphabet.is_clique_union() {
        return Err(Error::PreconditionViolated("alphabet is not a clique union".into()));
    }
    if let Some(a) = phi.erased_letters().first() {
        return Err(Error::PreconditionViolated(format!("`{}` maps to the identity", alphabet.name(a))));
    }
    if !phi.is_uniformly_continuous() {
        return Err(Error::PreconditionViolated("endomorphism is not uniformly continuous".into()));
    }
    ComponentMap::new(phi)
}

/// Classifies a clique by the behaviour of `w_Bφ^n`.
pub fn iterate_limit(phi: &Endomorphism, b: Clique) -> Result<LimitClass> {
    let map = require_limit_preconditions(phi)?;
    Ok(classify(phi, &map, b))
}

fn classify(phi: &Endomorphism, map: &ComponentMap, b: Clique) -> LimitClass {
    let w = Trace::of_clique(phi.alphabet(), b);
    let image = phi.apply_unchecked(&w);
    if image == w {
        return LimitClass::Fixed;
    }
    let Some(z) = w.cancel_from(&image) else {
        return LimitClass::NotExtending;
    };
    // Walk the component sets met by zφ^k until they repeat.
    let mut seen = HashSet::new();
    let mut r = map.mask(z.content());
    let mut k = 0;
    loop {
        let next = map.step(r);
        if r.count_ones() == 1 && next == r {
            return LimitClass::Stabilizes {
                component: r.trailing_zeros() as usize,
                steps: k,
                quotient: z,
            };
        }
        seen.insert(r);
        if seen.contains(&next) {
            let limit = InfiniteTrace {
                head: Trace::identity(phi.alphabet()),
                tail: Tail::Iterate {
                    endo: phi.clone(),
                    base: w,
                    seed: z.clone(),
                },
            };
            return LimitClass::Diverges { quotient: z, limit };
        }
        r = next;
        k += 1;
    }
}

/// A rational set of finite traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rational {
    Finite(Vec<Trace>),
    /// The submonoid generated by the traces.
    Star(Vec<Trace>),
    /// The submonoid generated by the traces, together with its limit points.
    /// Only meaningful as a whole term.
    ClosureStar(Vec<Trace>),
    /// `{a_1^{x_1} ⋯ a_k^{x_k} : x ∈ S}` for pairwise independent letters.
    Monomial { letters: Vec<Letter>, exponents: SemilinearSet },
    Concat(Vec<Rational>),
}

impl Rational {
    fn identity(alphabet: &Arc<IndependenceAlphabet>) -> Self {
        Rational::Finite(vec![Trace::identity(alphabet)])
    }

    fn is_identity(&self) -> bool {
        match self {
            Rational::Finite(v) => v.len() == 1 && v[0].is_identity(),
            Rational::Star(g) => g.is_empty(),
            Rational::Monomial { letters, exponents } => letters.is_empty() && !exponents.is_empty(),
            Rational::Concat(parts) => parts.iter().all(Rational::is_identity),
            Rational::ClosureStar(_) => false,
        }
    }

    /// Product of the parts, flattened, without identity factors.
    fn concat(alphabet: &Arc<IndependenceAlphabet>, parts: Vec<Rational>) -> Self {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Rational::Concat(inner) => flat.extend(inner),
                p if p.is_identity() => {}
                p => flat.push(p),
            }
        }
        match flat.len() {
            0 => Rational::identity(alphabet),
            1 => flat.pop().expect("one part"),
            _ => Rational::Concat(flat),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Rational::Finite(v) => v.is_empty(),
            Rational::Monomial { exponents, .. } => exponents.is_empty(),
            Rational::Concat(parts) => parts.iter().any(Rational::is_empty),
            Rational::Star(_) | Rational::ClosureStar(_) => false,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Rational::Finite(_) => true,
            Rational::Star(g) | Rational::ClosureStar(g) => g.is_empty(),
            Rational::Monomial { exponents, .. } => exponents.is_finite(),
            Rational::Concat(parts) => self.is_empty() || parts.iter().all(Rational::is_finite),
        }
    }

    fn monomial_trace(alphabet: &Arc<IndependenceAlphabet>, letters: &[Letter], v: &[u64]) -> Trace {
        Trace::from_letters(
            alphabet,
            letters.iter().zip(v).flat_map(|(&a, &n)| std::iter::repeat_n(a, n as usize)),
        )
    }

    /// Members `y` with `y ≤_p x`.
    pub fn prefix_members(&self, x: &Trace) -> Vec<Trace> {
        let alphabet = x.alphabet();
        match self {
            Rational::Finite(v) => v.iter().filter(|y| y.cancel_from(x).is_some()).cloned().collect(),
            Rational::Star(gens) | Rational::ClosureStar(gens) => {
                let identity = Trace::identity(alphabet);
                let mut seen = HashSet::from([identity.clone()]);
                let mut stack = vec![identity];
                while let Some(y) = stack.pop() {
                    for g in gens {
                        let next = y.concat(g);
                        if next.cancel_from(x).is_some() && seen.insert(next.clone()) {
                            stack.push(next);
                        }
                    }
                }
                seen.into_iter().collect()
            }
            Rational::Monomial { letters, exponents } => {
                // Occurrences of a usable before anything else dependent on a.
                let word = x.word();
                let upper: Vec<u64> = letters
                    .iter()
                    .map(|&a| {
                        let blocking = alphabet.dependent_on(a).difference(LetterSet::singleton(a));
                        word.iter().take_while(|&&c| !blocking.contains(c)).filter(|&&c| c == a).count() as u64
                    })
                    .collect();
                exponents
                    .enumerate_box(&upper)
                    .into_iter()
                    .map(|v| Rational::monomial_trace(alphabet, letters, &v))
                    .filter(|y| y.cancel_from(x).is_some())
                    .collect()
            }
            Rational::Concat(parts) => {
                let mut current = vec![Trace::identity(alphabet)];
                for part in parts {
                    let mut next = HashSet::new();
                    for y in &current {
                        let rest = y.cancel_from(x).expect("y is a prefix");
                        for m in part.prefix_members(&rest) {
                            next.insert(y.concat(&m));
                        }
                    }
                    current = next.into_iter().collect();
                }
                current
            }
        }
    }

    pub fn contains(&self, x: &Trace) -> bool {
        self.prefix_members(x).contains(x)
    }

    /// Members of length at most `maxlen`, sorted.
    pub fn members_up_to(&self, alphabet: &Arc<IndependenceAlphabet>, maxlen: usize) -> Vec<Trace> {
        let mut out = match self {
            Rational::Finite(v) => v.iter().filter(|y| y.len() <= maxlen).cloned().collect(),
            Rational::Star(gens) | Rational::ClosureStar(gens) => {
                submonoid_ball(alphabet, gens, maxlen).expect("generators are nontrivial")
            }
            Rational::Monomial { letters, exponents } => exponents
                .enumerate(maxlen as u64)
                .into_iter()
                .filter(|v| v.iter().sum::<u64>() <= maxlen as u64)
                .map(|v| Rational::monomial_trace(alphabet, letters, &v))
                .collect(),
            Rational::Concat(parts) => {
                let mut current = vec![Trace::identity(alphabet)];
                for part in parts {
                    let members = part.members_up_to(alphabet, maxlen);
                    let mut next = HashSet::new();
                    for y in &current {
                        for m in &members {
                            if y.len() + m.len() <= maxlen {
                                next.insert(y.concat(m));
                            }
                        }
                    }
                    current = next.into_iter().collect();
                }
                current
            }
        };
        sort_traces(&mut out);
        out
    }
}

/// `rational` alone, or `rational · point`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub rational: Rational,
    pub point: Option<InfiniteTrace>,
}

/// A finite union of terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MpRationalExpr {
    alphabet: Arc<IndependenceAlphabet>,
    terms: Vec<Term>,
}

/// Depth of the prefix searched for the rational part of a term, relative
/// to the probe depth.
fn probe_window(depth: usize) -> usize {
    2 * depth + 2
}

impl MpRationalExpr {
    fn new(alphabet: &Arc<IndependenceAlphabet>, terms: Vec<Term>) -> Self {
        MpRationalExpr {
            alphabet: Arc::clone(alphabet),
            terms: terms.into_iter().filter(|t| !t.rational.is_empty()).collect(),
        }
    }

    pub fn alphabet(&self) -> &Arc<IndependenceAlphabet> {
        &self.alphabet
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// True when the expression denotes finitely many points.
    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|t| t.rational.is_finite())
    }

    /// Membership probe. Finite traces are decided exactly. A boundary point
    /// `X` is accepted when some term `R·P` has a member `y ≤_p` a deep
    /// enough prefix of `X` with `y·P` agreeing with `X` on `depth` cliques,
    /// or when a closure term has a product of generators agreeing with `X`
    /// on `depth` cliques.
    pub fn accepts(&self, x: &RealTrace, depth: usize) -> Result<bool> {
        if !same_alphabet(&self.alphabet, x.alphabet()) {
            return Err(Error::AlphabetMismatch);
        }
        let x = match x {
            RealTrace::Finite(u) => {
                return Ok(self.terms.iter().any(|t| t.point.is_none() && t.rational.contains(u)));
            }
            RealTrace::Infinite(x) => x,
        };
        let target = x.fnf_prefix(depth)?;
        let mut window = None;
        for term in &self.terms {
            match &term.point {
                None => {
                    if let Rational::ClosureStar(gens) = &term.rational {
                        if closure_probe(&self.alphabet, gens, &target, depth) {
                            return Ok(true);
                        }
                    }
                }
                Some(point) => {
                    if window.is_none() {
                        window = Some(x.fnf_prefix(probe_window(depth))?);
                    }
                    let window = window.as_ref().expect("set above");
                    for y in term.rational.prefix_members(window) {
                        let candidate = InfiniteTrace {
                            head: y.concat(&point.head),
                            tail: point.tail.clone(),
                        };
                        if candidate.fnf_prefix(depth)? == target {
                            return Ok(true);
                        }
                    }
                }
            }
        }
        Ok(false)
    }

    /// Members built from rational parts of length at most `maxlen`: finite
    /// members, `y·P` for point terms, and `g^ω` for closure terms.
    pub fn sample(&self, maxlen: usize) -> Vec<RealTrace> {
        let mut out = Vec::new();
        for term in &self.terms {
            let members = term.rational.members_up_to(&self.alphabet, maxlen);
            match &term.point {
                None => {
                    for y in members {
                        if matches!(term.rational, Rational::ClosureStar(_)) {
                            out.push(omega_power(&y));
                        }
                        out.push(RealTrace::Finite(y));
                    }
                }
                Some(point) => out.extend(members.into_iter().map(|y| {
                    RealTrace::Infinite(InfiniteTrace {
                        head: y.concat(&point.head),
                        tail: point.tail.clone(),
                    })
                })),
            }
        }
        out
    }
}

/// FNF window of a product of generators: cliques up to `depth`, and the
/// height of each letter's last occurrence, capped at `depth + 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Window {
    cliques: Vec<LetterSet>,
    top: Vec<usize>,
}

/// Is some product of `gens` equal to `target` on its first `depth` cliques?
/// Decided exactly by a search over windows, of which there are finitely many.
fn closure_probe(alphabet: &IndependenceAlphabet, gens: &[Trace], target: &Trace, depth: usize) -> bool {
    let target: Vec<LetterSet> = target.cliques().iter().map(|c| c.letters()).collect();
    let start = Window {
        cliques: Vec::new(),
        top: vec![0; alphabet.len()],
    };
    if start.cliques == target {
        return true;
    }
    let words: Vec<Vec<Letter>> = gens.iter().map(Trace::word).collect();
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(w) = queue.pop_front() {
        'gens: for word in &words {
            let mut next = w.clone();
            for &a in word {
                let floor = 1 + alphabet.dependent_on(a).iter().map(|d| next.top[d.index()]).max().unwrap_or(0);
                if floor <= depth {
                    if floor > target.len() || !target[floor - 1].contains(a) {
                        continue 'gens;
                    }
                    if next.cliques.len() < floor {
                        next.cliques.push(LetterSet::EMPTY);
                    }
                    next.cliques[floor - 1].insert(a);
                }
                next.top[a.index()] = floor.min(depth + 1);
            }
            if next.cliques == target {
                return true;
            }
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    false
}

fn is_commutative(alphabet: &IndependenceAlphabet) -> bool {
    alphabet.is_empty() || alphabet.is_clique(alphabet.all())
}

/// `{X : u·XΦ = X}` for an endomorphism of a free commutative monoid.
pub fn y_fixed_set(phi: &Endomorphism, u: &Trace) -> Result<MpRationalExpr> {
    let alphabet = phi.alphabet();
    if !is_commutative(alphabet) {
        return Err(Error::NotCommutativeComponent);
    }
    if !same_alphabet(alphabet, u.alphabet()) {
        return Err(Error::AlphabetMismatch);
    }
    Ok(MpRationalExpr::new(alphabet, component_terms(phi, alphabet.all(), u)))
}

/// Terms of `{X over component : u·XΦ = X}`, for a component mapped into
/// itself. `X = a^x w_B^ω` where `B` holds the letters occurring infinitely
/// often; the letter counts outside `B` solve `x = |u| + Mx`.
fn component_terms(phi: &Endomorphism, component: LetterSet, u: &Trace) -> Vec<Term> {
    let alphabet = phi.alphabet();
    let bits = component.bits();
    let mut subsets = Vec::new();
    let mut sub = bits;
    loop {
        subsets.push(LetterSet::from_bits(sub));
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & bits;
    }
    subsets.sort_by_key(|s| (s.len(), s.bits()));
    let mut terms = Vec::new();
    for b in subsets {
        if phi.image_content(b) != b {
            continue;
        }
        let rest: Vec<Letter> = component.difference(b).iter().collect();
        let m: Vec<Vec<u64>> = rest
            .iter()
            .map(|&ai| rest.iter().map(|&at| phi.image(at).count(ai) as u64).collect())
            .collect();
        let c: Vec<u64> = rest.iter().map(|&ai| u.count(ai) as u64).collect();
        let exponents = solve_affine_nat(&m, &c).expect("square system");
        if exponents.is_empty() {
            continue;
        }
        let rational = if rest.is_empty() {
            Rational::identity(alphabet)
        } else {
            Rational::Monomial { letters: rest, exponents }
        };
        let point = alphabet.clique(b).map(|clique| InfiniteTrace {
            head: Trace::identity(alphabet),
            tail: Tail::Periodic(Trace::of_clique(alphabet, clique)),
        });
        terms.push(Term { rational, point });
    }
    terms
}

/// An mp-rational description of `Fix Φ` over a clique-union alphabet.
pub fn boundary_fix_description(phi: &Endomorphism) -> Result<MpRationalExpr> {
    let alphabet = phi.alphabet();
    if !alphabet.is_clique_union() {
        return Err(Error::NotCliqueUnion);
    }
    phi.require_uniformly_continuous()?;
    if phi.is_trivial() {
        return Ok(MpRationalExpr::new(
            alphabet,
            vec![Term {
                rational: Rational::identity(alphabet),
                point: None,
            }],
        ));
    }
    let identity = Trace::identity(alphabet);
    let components = alphabet.connected_components();
    if components.len() == 1 {
        return Ok(MpRationalExpr::new(alphabet, component_terms(phi, alphabet.all(), &identity)));
    }
    let map = require_limit_preconditions(phi)?;
    let gens = fix_generators(phi).generators;
    let mut terms = vec![Term {
        rational: Rational::ClosureStar(gens.clone()),
        point: None,
    }];
    let star = Rational::Star(gens);
    for b in alphabet.cliques() {
        match classify(phi, &map, b) {
            LimitClass::Fixed | LimitClass::NotExtending => {}
            LimitClass::Stabilizes {
                component,
                steps,
                quotient,
            } => {
                let mut prefix = Trace::of_clique(alphabet, b);
                let mut current = quotient;
                for _ in 0..steps {
                    prefix = prefix.concat(&current);
                    current = phi.apply_unchecked(&current);
                }
                for t in component_terms(phi, map.components[component], &current) {
                    let rational = Rational::concat(
                        alphabet,
                        vec![star.clone(), Rational::Finite(vec![prefix.clone()]), t.rational],
                    );
                    terms.push(Term {
                        rational,
                        point: t.point,
                    });
                }
            }
            LimitClass::Diverges { limit, .. } => terms.push(Term {
                rational: Rational::concat(alphabet, vec![star.clone()]),
                point: Some(limit),
            }),
        }
    }
    Ok(MpRationalExpr::new(alphabet, terms))
}

impl fmt::Display for InfiniteTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = (!self.head.is_identity()).then(|| self.head.to_string());
        match &self.tail {
            Tail::Periodic(p) => write!(f, "{}({p})ω", head.unwrap_or_default()),
            tail => {
                if let Some(head) = head {
                    write!(f, "{head}·")?;
                }
                match tail {
                    Tail::Iterate { base, .. } => write!(f, "lim {base}^φ"),
                    Tail::Image { source, .. } => write!(f, "({source})Φ"),
                    Tail::Periodic(_) => unreachable!(),
                }
            }
        }
    }
}

impl fmt::Display for RealTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealTrace::Finite(u) => write!(f, "{u}"),
            RealTrace::Infinite(x) => write!(f, "{x}"),
        }
    }
}

struct Shown<'a>(&'a Rational, &'a IndependenceAlphabet);

fn join(traces: &[Trace], sep: &str) -> String {
    traces.iter().map(Trace::to_string).collect::<Vec<_>>().join(sep)
}

impl fmt::Display for Shown<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Shown(rational, alphabet) = self;
        match rational {
            Rational::Finite(v) if v.is_empty() => f.write_str("∅"),
            Rational::Finite(v) if v.len() == 1 => write!(f, "{}", v[0]),
            Rational::Finite(v) => write!(f, "({})", join(v, " ∪ ")),
            Rational::Star(g) => write!(f, "⟨{}⟩", join(g, ", ")),
            Rational::ClosureStar(g) => write!(f, "cl⟨{}⟩", join(g, ", ")),
            Rational::Monomial { letters, exponents } => {
                let names: Vec<&str> = letters.iter().map(|&a| alphabet.name(a)).collect();
                write!(f, "({})^[{exponents}]", names.join(" "))
            }
            Rational::Concat(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("·")?;
                    }
                    write!(f, "{}", Shown(p, alphabet))?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for MpRationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("∅");
        }
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∪ ")?;
            }
            match &term.point {
                None => write!(f, "{}", Shown(&term.rational, &self.alphabet))?,
                Some(p) if term.rational.is_identity() => write!(f, "{p}")?,
                Some(p) => write!(f, "{}·{p}", Shown(&term.rational, &self.alphabet))?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha(letters: &[&str], pairs: &[(&str, &str)]) -> Arc<IndependenceAlphabet> {
        Arc::new(IndependenceAlphabet::new(letters, pairs).unwrap())
    }

    fn t(alphabet: &Arc<IndependenceAlphabet>, w: &str) -> Trace {
        Trace::parse(alphabet, w).unwrap()
    }

    fn periodic(alphabet: &Arc<IndependenceAlphabet>, u: &str, v: &str) -> RealTrace {
        RealTrace::Infinite(InfiniteTrace::eventually_periodic(&t(alphabet, u), &t(alphabet, v)).unwrap())
    }

    fn prefix(x: &RealTrace, n: usize) -> String {
        x.fnf_prefix(n).unwrap().to_string()
    }

    #[test]
    fn omega_powers() {
        let free = alpha(&["a", "b"], &[]);
        assert_eq!(prefix(&omega_power(&t(&free, "a")), 3), "{a}{a}{a}");
        assert_eq!(prefix(&omega_power(&t(&free, "a")), 0), "{}");
        let comm = alpha(&["a", "b"], &[("a", "b")]);
        assert_eq!(prefix(&omega_power(&t(&comm, "ab")), 2), "{a,b}{a,b}");
        assert_eq!(omega_power(&t(&comm, "")), RealTrace::Finite(t(&comm, "")));
    }

    #[test]
    fn prefixes_of_limits() {
        let comm = alpha(&["a", "b"], &[("a", "b")]);
        assert_eq!(prefix(&periodic(&comm, "a", "b"), 3), "{a,b}{b}{b}");
        let free = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::from_words(&free, &["ab", "b"]).unwrap();
        let lim = RealTrace::Infinite(InfiniteTrace::iterate_limit(&phi, &t(&free, "a")).unwrap());
        assert_eq!(prefix(&lim, 4), "{a}{b}{b}{b}");
        assert!(lim.equal_to_depth(&periodic(&free, "a", "b"), 10).unwrap());
        assert!(!omega_power(&t(&free, "a")).equal_to_depth(&omega_power(&t(&free, "b")), 1).unwrap());
    }

    #[test]
    fn budget() {
        let free = alpha(&["a", "b"], &[]);
        let x = periodic(&free, "", "ab");
        let RealTrace::Infinite(x) = x else { unreachable!() };
        assert_eq!(x.fnf_prefix_with_budget(100, 10), Err(Error::BudgetExceeded(10)));
    }

    #[test]
    fn mixed_products() {
        let free = alpha(&["a", "b"], &[]);
        let x = periodic(&free, "a", "b");
        assert_eq!(mixed_product(&t(&free, ""), &x).unwrap(), x);
        assert_eq!(prefix(&mixed_product(&t(&free, "b"), &x).unwrap(), 3), "{b}{a}{b}");
        let other = alpha(&["a"], &[]);
        assert_eq!(mixed_product(&t(&other, "a"), &x), Err(Error::AlphabetMismatch));
    }

    #[test]
    fn extensions() {
        let free = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::from_words(&free, &["ab", "b"]).unwrap();
        let image = apply_extension(&phi, &omega_power(&t(&free, "a"))).unwrap();
        assert_eq!(prefix(&image, 4), "{a}{b}{a}{b}");
        let x = periodic(&free, "ab", "ba");
        let id = Endomorphism::identity(&free);
        assert!(apply_extension(&id, &x).unwrap().equal_to_depth(&x, 20).unwrap());
        let comm = alpha(&["a", "b"], &[("a", "b")]);
        let erase_b = Endomorphism::from_words(&comm, &["a", ""]).unwrap();
        let y = periodic(&comm, "ab", "b");
        assert_eq!(apply_extension(&erase_b, &y).unwrap(), RealTrace::Finite(t(&comm, "a")));

        let path = alpha(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        let phi = Endomorphism::from_words(&path, &["ab", "b", "cb"]).unwrap();
        let v1 = omega_power(&t(&path, "abbc"));
        assert!(apply_extension(&phi, &v1).unwrap().equal_to_depth(&v1, 12).unwrap());

        // An iterate limit under a different map goes through the generic image.
        let psi = Endomorphism::from_words(&free, &["a", "bb"]).unwrap();
        let lim = RealTrace::Infinite(InfiniteTrace::iterate_limit(&Endomorphism::from_words(&free, &["ab", "b"]).unwrap(), &t(&free, "a")).unwrap());
        let image = apply_extension(&psi, &lim).unwrap();
        assert_eq!(prefix(&image, 5), "{a}{b}{b}{b}{b}");
        let grow = Endomorphism::from_words(&comm, &["ab", "b"]).unwrap();
        let lim = RealTrace::Infinite(InfiniteTrace::iterate_limit(&grow, &t(&comm, "a")).unwrap());
        assert_eq!(apply_extension(&erase_b, &lim).unwrap(), RealTrace::Finite(t(&comm, "a")));

        let bad = Endomorphism::from_words(&path, &["", "b", "c"]).unwrap();
        assert!(matches!(apply_extension(&bad, &v1), Err(Error::NotUniformlyContinuous(..))));
    }

    #[test]
    fn exact_equality() {
        let free = alpha(&["a", "b"], &[]);
        assert_eq!(periodic(&free, "a", "ba").exact_eq(&periodic(&free, "ab", "ab")), Some(true));
        assert_eq!(periodic(&free, "", "a").exact_eq(&periodic(&free, "", "aa")), Some(true));
        assert_eq!(periodic(&free, "", "ab").exact_eq(&periodic(&free, "", "ba")), Some(false));
        let comm = alpha(&["a", "b"], &[("a", "b")]);
        assert_eq!(periodic(&comm, "", "ab").exact_eq(&periodic(&comm, "", "ba")), Some(true));
        assert_eq!(periodic(&comm, "a", "b").exact_eq(&periodic(&comm, "", "b")), Some(false));
        assert_eq!(RealTrace::Finite(t(&comm, "ab")).exact_eq(&RealTrace::Finite(t(&comm, "ba"))), Some(true));
    }

    #[test]
    fn limit_classes() {
        let free = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::from_words(&free, &["ab", "b"]).unwrap();
        let a = free.clique(LetterSet::singleton(free.letter("a").unwrap())).unwrap();
        let b = free.clique(LetterSet::singleton(free.letter("b").unwrap())).unwrap();
        assert_eq!(
            iterate_limit(&phi, a).unwrap(),
            LimitClass::Stabilizes {
                component: 1,
                steps: 0,
                quotient: t(&free, "b")
            }
        );
        assert_eq!(iterate_limit(&phi, b).unwrap(), LimitClass::Fixed);
        let swap = Endomorphism::from_words(&free, &["b", "a"]).unwrap();
        assert_eq!(iterate_limit(&swap, a).unwrap(), LimitClass::NotExtending);
        let alternate = Endomorphism::from_words(&free, &["ab", "a"]).unwrap();
        assert!(matches!(iterate_limit(&alternate, a).unwrap(), LimitClass::Diverges { .. }));
        let erase = Endomorphism::from_words(&free, &["", "b"]).unwrap();
        assert!(matches!(iterate_limit(&erase, a), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn commutative_fixed_sets() {
        let comm = alpha(&["a", "b"], &[("a", "b")]);
        let phi = Endomorphism::from_words(&comm, &["aa", "b"]).unwrap();
        let y = y_fixed_set(&phi, &t(&comm, "a")).unwrap();
        assert_eq!(y.to_string(), "(b)^[base (0) + periods {(1)}]·({a})ω ∪ ({a,b})ω");
        assert!(y.accepts(&periodic(&comm, "bbb", "a"), 12).unwrap());
        assert!(y.accepts(&periodic(&comm, "", "ab"), 12).unwrap());
        assert!(!y.accepts(&periodic(&comm, "", "b"), 12).unwrap());
        assert!(!y.accepts(&RealTrace::Finite(t(&comm, "a")), 12).unwrap());

        let id = Endomorphism::identity(&comm);
        let all = y_fixed_set(&id, &t(&comm, "")).unwrap();
        assert_eq!(all.terms().len(), 4);
        for x in [periodic(&comm, "aab", "b"), RealTrace::Finite(t(&comm, "abb")), periodic(&comm, "a", "ab")] {
            assert!(all.accepts(&x, 12).unwrap());
        }

        let single = alpha(&["a"], &[]);
        let y = y_fixed_set(&Endomorphism::identity(&single), &t(&single, "a")).unwrap();
        assert_eq!(y.to_string(), "({a})ω");

        let free = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::identity(&free);
        assert_eq!(y_fixed_set(&phi, &t(&free, "")), Err(Error::NotCommutativeComponent));
    }

    #[test]
    fn descriptions() {
        let free = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::from_words(&free, &["ab", "b"]).unwrap();
        let d = boundary_fix_description(&phi).unwrap();
        assert_eq!(d.to_string(), "cl⟨{b}⟩ ∪ ⟨{b}⟩·{a}·({b})ω");
        for k in 0..5 {
            let x = periodic(&free, &format!("{}a", "b".repeat(k)), "b");
            assert!(apply_extension(&phi, &x).unwrap().equal_to_depth(&x, 12).unwrap());
            assert!(d.accepts(&x, 12).unwrap());
        }
        assert!(d.accepts(&omega_power(&t(&free, "b")), 12).unwrap());
        assert!(!d.accepts(&omega_power(&t(&free, "a")), 12).unwrap());
        assert!(d.accepts(&RealTrace::Finite(t(&free, "bb")), 12).unwrap());
        assert!(!d.accepts(&RealTrace::Finite(t(&free, "ab")), 12).unwrap());

        let path = alpha(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        let phi = Endomorphism::from_words(&path, &["ab", "b", "cb"]).unwrap();
        assert_eq!(boundary_fix_description(&phi), Err(Error::NotCliqueUnion));

        let g = alpha(&["a", "b", "c"], &[("a", "b")]);
        let id = boundary_fix_description(&Endomorphism::identity(&g)).unwrap();
        for x in [periodic(&g, "c", "ab"), periodic(&g, "ab", "cab"), omega_power(&t(&g, "c"))] {
            assert!(id.accepts(&x, 12).unwrap());
        }

        let trivial = Endomorphism::from_words(&free, &["", ""]).unwrap();
        let d = boundary_fix_description(&trivial).unwrap();
        assert_eq!(d.to_string(), "{}");
        assert!(d.is_finite());
    }

    #[test]
    fn sampled_members_are_fixed() {
        let g = alpha(&["a", "b", "c"], &[("a", "b")]);
        let phi = Endomorphism::from_words(&g, &["ab", "b", "cc"]).unwrap();
        let d = boundary_fix_description(&phi).unwrap();
        let sample = d.sample(4);
        assert!(!sample.is_empty());
        for x in sample {
            let image = apply_extension(&phi, &x).unwrap();
            assert!(image.equal_to_depth(&x, 12).unwrap(), "{x} not fixed");
            assert!(d.accepts(&x, 12).unwrap(), "{x} rejected");
        }
    }
}
