//! Elements of the trace monoid `M(A, I)`, stored as Foata normal forms.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::alphabet::{Clique, Embedding, IndependenceAlphabet, Letter, LetterSet};
use crate::error::{Error, Result};

/// A trace in Foata normal form.
///
/// The FNF is the canonical representation: two traces are equal exactly when
/// their clique sequences are equal. The empty sequence is the identity.
#[derive(Clone)]
pub struct Trace {
    alphabet: Arc<IndependenceAlphabet>,
    fnf: Vec<Clique>,
}

impl PartialEq for Trace {
    fn eq(&self, other: &Self) -> bool {
        self.fnf == other.fnf && same_alphabet(&self.alphabet, &other.alphabet)
    }
}

impl Eq for Trace {}

impl Hash for Trace {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.fnf.hash(state);
    }
}

impl PartialOrd for Trace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Length first, then FNF text.
impl Ord for Trace {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.to_string().cmp(&other.to_string()))
    }
}

pub(crate) fn same_alphabet(a: &Arc<IndependenceAlphabet>, b: &Arc<IndependenceAlphabet>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.fnf.is_empty() {
            return f.write_str("{}");
        }
        for clique in &self.fnf {
            f.write_str(&self.alphabet.format_set(clique.letters()))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Trace({self})")
    }
}

impl Trace {
    pub fn identity(alphabet: &Arc<IndependenceAlphabet>) -> Trace {
        Trace {
            alphabet: Arc::clone(alphabet),
            fnf: Vec::new(),
        }
    }

    pub fn letter(alphabet: &Arc<IndependenceAlphabet>, a: Letter) -> Trace {
        Trace::from_letters(alphabet, [a])
    }

    /// The FNF of the class of `word`.
    pub fn from_word(alphabet: &Arc<IndependenceAlphabet>, word: &[Letter]) -> Result<Trace> {
        if let Some(&bad) = word.iter().find(|a| a.index() >= alphabet.len()) {
            return Err(Error::UnknownLetter(format!("#{}", bad.index())));
        }
        Ok(Trace::from_letters(alphabet, word.iter().copied()))
    }

    pub(crate) fn from_letters<I: IntoIterator<Item = Letter>>(alphabet: &Arc<IndependenceAlphabet>, word: I) -> Trace {
        let mut builder = FnfBuilder::new(alphabet);
        builder.extend(word);
        builder.finish()
    }

    /// Parses a word in the alphabet's word syntax.
    pub fn parse(alphabet: &Arc<IndependenceAlphabet>, text: &str) -> Result<Trace> {
        let word = alphabet.parse_word(text)?;
        Trace::from_word(alphabet, &word)
    }

    /// `w_B`, the product of the letters of a clique.
    pub fn of_clique(alphabet: &Arc<IndependenceAlphabet>, clique: Clique) -> Trace {
        Trace {
            alphabet: Arc::clone(alphabet),
            fnf: vec![clique],
        }
    }

    /// Builds a trace from a clique sequence, checking the FNF conditions.
    pub fn from_cliques(alphabet: &Arc<IndependenceAlphabet>, cliques: &[LetterSet]) -> Option<Trace> {
        let mut fnf = Vec::with_capacity(cliques.len());
        for (i, &set) in cliques.iter().enumerate() {
            let clique = alphabet.clique(set)?;
            if i > 0 {
                let previous = cliques[i - 1];
                let supported = set
                    .iter()
                    .all(|a| !previous.intersection(alphabet.dependent_on(a)).is_empty());
                if !supported {
                    return None;
                }
            }
            fnf.push(clique);
        }
        Some(Trace {
            alphabet: Arc::clone(alphabet),
            fnf,
        })
    }

    pub fn alphabet(&self) -> &Arc<IndependenceAlphabet> {
        &self.alphabet
    }

    pub fn cliques(&self) -> &[Clique] {
        &self.fnf
    }

    /// Number of letter occurrences.
    pub fn len(&self) -> usize {
        self.fnf.iter().map(|c| c.len()).sum()
    }

    /// Number of FNF cliques.
    pub fn depth(&self) -> usize {
        self.fnf.len()
    }

    pub fn is_identity(&self) -> bool {
        self.fnf.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.fnf.is_empty()
    }

    /// A representative word: cliques in order, each in letter order.
    pub fn word(&self) -> Vec<Letter> {
        self.letters().collect()
    }

    pub(crate) fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.fnf.iter().flat_map(|c| c.letters().iter())
    }

    fn check_alphabet(&self, other: &Trace) -> Result<()> {
        if same_alphabet(&self.alphabet, &other.alphabet) {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch)
        }
    }

    pub fn multiply(&self, other: &Trace) -> Result<Trace> {
        self.check_alphabet(other)?;
        Ok(self.concat(other))
    }

    pub(crate) fn concat(&self, other: &Trace) -> Trace {
        if other.is_identity() {
            return self.clone();
        }
        let mut builder = FnfBuilder::from_trace(self);
        builder.extend(other.letters());
        builder.finish()
    }

    /// `self^n`.
    pub fn pow(&self, n: usize) -> Trace {
        let mut builder = FnfBuilder::new(&self.alphabet);
        for _ in 0..n {
            builder.extend(self.letters());
        }
        builder.finish()
    }

    /// `|u|_a`.
    pub fn count(&self, a: Letter) -> usize {
        self.fnf.iter().filter(|c| c.letters().contains(a)).count()
    }

    /// The set of letters occurring in the trace.
    pub fn content(&self) -> LetterSet {
        self.fnf
            .iter()
            .fold(LetterSet::EMPTY, |acc, c| acc.union(c.letters()))
    }

    /// `u ∼_I v`: every letter of one is independent of every letter of the other.
    pub fn is_independent_of(&self, other: &Trace) -> bool {
        let theirs = other.content();
        self.content()
            .iter()
            .all(|a| theirs.is_subset(self.alphabet.independent_of(a)))
    }

    /// The letters that can start a representative word.
    pub fn minimal_letters(&self) -> LetterSet {
        self.fnf.first().map_or(LetterSet::EMPTY, |c| c.letters())
    }

    /// The image under the projection keeping only the letters of `keep`.
    pub fn project(&self, keep: LetterSet) -> Trace {
        Trace::from_letters(&self.alphabet, self.letters().filter(|&a| keep.contains(a)))
    }

    /// Equality decided through projections onto every dependent pair.
    pub fn equals_via_projections(&self, other: &Trace) -> Result<bool> {
        self.check_alphabet(other)?;
        let (u, v) = (self.word(), other.word());
        Ok(self.alphabet.dependent_pairs().all(|(a, b)| {
            let keep = |w: &[Letter]| -> Vec<Letter> { w.iter().copied().filter(|&x| x == a || x == b).collect() };
            keep(&u) == keep(&v)
        }))
    }

    /// True iff `other = self · w` for some trace `w`.
    pub fn is_prefix_of(&self, other: &Trace) -> Result<bool> {
        self.check_alphabet(other)?;
        Ok(self.cancel_from(other).is_some())
    }

    /// The unique `w` with `other = self · w`.
    pub fn prefix_quotient(&self, other: &Trace) -> Result<Trace> {
        self.check_alphabet(other)?;
        self.cancel_from(other).ok_or(Error::NotAPrefix)
    }

    pub(crate) fn cancel_from(&self, other: &Trace) -> Option<Trace> {
        if self.len() > other.len() {
            return None;
        }
        let mut rest = other.word();
        for a in self.letters() {
            let pos = rest.iter().position(|&x| x == a)?;
            let dependent = self.alphabet.dependent_on(a);
            if rest[..pos].iter().any(|&x| dependent.contains(x)) {
                return None;
            }
            rest.remove(pos);
        }
        Some(Trace::from_letters(&self.alphabet, rest))
    }

    /// All prefixes of the trace, in no particular order.
    pub fn prefixes(&self) -> Vec<Trace> {
        let mut seen = HashSet::new();
        let mut stack = vec![Trace::identity(&self.alphabet)];
        seen.insert(stack[0].clone());
        while let Some(p) = stack.pop() {
            let rest = p.cancel_from(self).expect("p is a prefix");
            for a in rest.minimal_letters().iter() {
                let next = p.concat(&Trace::letter(&self.alphabet, a));
                if seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// Length of the longest common FNF clique prefix; `None` when equal.
    pub fn fnf_agreement(&self, other: &Trace) -> Result<Option<usize>> {
        self.check_alphabet(other)?;
        Ok(agreement(&self.fnf, &other.fnf))
    }

    /// The FNF ultrametric `2^-r`.
    pub fn fnf_distance(&self, other: &Trace) -> Result<Distance> {
        Ok(match self.fnf_agreement(other)? {
            None => Distance::Zero,
            Some(r) => Distance::PowNeg(r),
        })
    }

    /// The first `n` cliques as a trace.
    pub fn truncate(&self, n: usize) -> Trace {
        Trace {
            alphabet: Arc::clone(&self.alphabet),
            fnf: self.fnf[..n.min(self.fnf.len())].to_vec(),
        }
    }

    /// Re-expresses a trace of the parent alphabet over the sub-alphabet.
    pub fn lower(&self, embedding: &Embedding) -> Result<Trace> {
        let fnf = self
            .fnf
            .iter()
            .map(|c| {
                c.letters()
                    .iter()
                    .map(|a| {
                        embedding
                            .from_parent(a)
                            .ok_or_else(|| Error::NotClosed(self.alphabet.name(a).to_string()))
                    })
                    .collect::<Result<LetterSet>>()
                    .map(Clique::new_unchecked)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Trace {
            alphabet: Arc::clone(embedding.sub()),
            fnf,
        })
    }

    /// Re-expresses a trace of the sub-alphabet over the parent alphabet.
    pub fn lift(&self, embedding: &Embedding) -> Trace {
        Trace {
            alphabet: Arc::clone(embedding.parent()),
            fnf: self
                .fnf
                .iter()
                .map(|c| Clique::new_unchecked(embedding.lift_set(c.letters())))
                .collect(),
        }
    }
}

pub(crate) fn agreement(u: &[Clique], v: &[Clique]) -> Option<usize> {
    if u == v {
        return None;
    }
    Some(u.iter().zip(v).take_while(|(x, y)| x == y).count())
}

/// Sorts and deduplicates traces by length and FNF text.
pub fn sort_traces(traces: &mut Vec<Trace>) {
    let mut keyed: Vec<(usize, String, Trace)> = traces
        .drain(..)
        .map(|t| (t.len(), t.to_string(), t))
        .collect();
    keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    keyed.dedup_by(|a, b| a.1 == b.1);
    traces.extend(keyed.into_iter().map(|(_, _, t)| t));
}

/// An exact value of the FNF metric: `0` or `2^-r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distance {
    Zero,
    PowNeg(usize),
}

impl Ord for Distance {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Distance::Zero, Distance::Zero) => Ordering::Equal,
            (Distance::Zero, _) => Ordering::Less,
            (_, Distance::Zero) => Ordering::Greater,
            (Distance::PowNeg(r), Distance::PowNeg(s)) => s.cmp(r),
        }
    }
}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Zero => f.write_str("0"),
            Distance::PowNeg(r) => write!(f, "2^-{r}"),
        }
    }
}

/// Incremental FNF construction.
///
/// Each appended occurrence lands at height one more than the highest
/// dependent occurrence so far (the same letter counts as dependent).
/// Appending never moves existing occurrences.
#[derive(Clone)]
pub(crate) struct FnfBuilder {
    alphabet: Arc<IndependenceAlphabet>,
    cliques: Vec<LetterSet>,
    top: Vec<usize>,
    len: usize,
}

impl FnfBuilder {
    pub fn new(alphabet: &Arc<IndependenceAlphabet>) -> Self {
        FnfBuilder {
            alphabet: Arc::clone(alphabet),
            cliques: Vec::new(),
            top: vec![0; alphabet.len()],
            len: 0,
        }
    }

    pub fn from_trace(trace: &Trace) -> Self {
        let mut builder = FnfBuilder::new(&trace.alphabet);
        for (i, clique) in trace.fnf.iter().enumerate() {
            for a in clique.letters().iter() {
                builder.top[a.index()] = i + 1;
            }
            builder.cliques.push(clique.letters());
        }
        builder.len = trace.len();
        builder
    }

    /// Height a new occurrence of `a` would land at.
    pub fn floor(&self, a: Letter) -> usize {
        1 + self
            .alphabet
            .dependent_on(a)
            .iter()
            .map(|x| self.top[x.index()])
            .max()
            .unwrap_or(0)
    }

    pub fn push(&mut self, a: Letter) {
        let height = self.floor(a);
        if height > self.cliques.len() {
            self.cliques.push(LetterSet::EMPTY);
        }
        self.cliques[height - 1].insert(a);
        self.top[a.index()] = height;
        self.len += 1;
    }

    pub fn extend<I: IntoIterator<Item = Letter>>(&mut self, letters: I) {
        for a in letters {
            self.push(a);
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Number of leading cliques no future occurrence of a letter in
    /// `future` can reach.
    pub fn settled_depth(&self, future: LetterSet) -> usize {
        future
            .iter()
            .map(|a| self.floor(a) - 1)
            .min()
            .unwrap_or(usize::MAX)
    }

    pub fn finish(self) -> Trace {
        Trace {
            fnf: self.cliques.into_iter().map(Clique::new_unchecked).collect(),
            alphabet: self.alphabet,
        }
    }
}
