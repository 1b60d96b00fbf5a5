//! Endomorphisms of trace monoids.
//!
//! An endomorphism is determined by its letter images; it is well defined when
//! the images of independent letters commute. Maps act on the right, so
//! `compose(φ, ψ)` sends `u` to `(uφ)ψ`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::alphabet::{Embedding, IndependenceAlphabet, Letter, LetterSet};
use crate::error::{Error, Result};
use crate::trace::{same_alphabet, FnfBuilder, Trace};

/// Default cap on the length of orbit elements in [`Endomorphism::iterate_apply`].
pub const DEFAULT_ORBIT_BUDGET: usize = 10_000;

#[derive(Clone)]
pub struct Endomorphism {
    alphabet: Arc<IndependenceAlphabet>,
    images: Vec<Trace>,
}

impl PartialEq for Endomorphism {
    fn eq(&self, other: &Self) -> bool {
        same_alphabet(&self.alphabet, &other.alphabet) && self.images == other.images
    }
}

impl Eq for Endomorphism {}

impl fmt::Debug for Endomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .alphabet
            .letters()
            .map(|a| format!("{}->{}", self.alphabet.name(a), self.images[a.index()]))
            .collect();
        write!(f, "Endomorphism[{}]", parts.join(", "))
    }
}

impl fmt::Display for Endomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.alphabet.letters() {
            writeln!(f, "{} -> {}", self.alphabet.name(a), self.images[a.index()])?;
        }
        Ok(())
    }
}

/// Outcome of the uniform continuity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    Uniform,
    /// Letters with `c ≤_p bφ`, `c ∼_I aφ` and `(a, b) ∉ I`.
    Witness { a: Letter, b: Letter, c: Letter },
}

impl Endomorphism {
    /// Validates letter images: one per letter, and independent letters must
    /// have commuting images.
    pub fn new(alphabet: &Arc<IndependenceAlphabet>, images: Vec<Trace>) -> Result<Self> {
        if images.len() != alphabet.len() {
            return Err(Error::DimensionMismatch {
                expected: alphabet.len(),
                got: images.len(),
            });
        }
        if images.iter().any(|t| !same_alphabet(t.alphabet(), alphabet)) {
            return Err(Error::AlphabetMismatch);
        }
        for (a, b) in alphabet.independent_pairs() {
            let (x, y) = (&images[a.index()], &images[b.index()]);
            if x.concat(y) != y.concat(x) {
                return Err(Error::NotWellDefined(
                    alphabet.name(a).to_string(),
                    alphabet.name(b).to_string(),
                ));
            }
        }
        Ok(Endomorphism {
            alphabet: Arc::clone(alphabet),
            images,
        })
    }

    /// Parses one image word per letter, in letter order.
    pub fn from_words<S: AsRef<str>>(alphabet: &Arc<IndependenceAlphabet>, words: &[S]) -> Result<Self> {
        let images = words
            .iter()
            .map(|w| Trace::parse(alphabet, w.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Endomorphism::new(alphabet, images)
    }

    pub fn identity(alphabet: &Arc<IndependenceAlphabet>) -> Self {
        Endomorphism {
            alphabet: Arc::clone(alphabet),
            images: alphabet.letters().map(|a| Trace::letter(alphabet, a)).collect(),
        }
    }

    /// `π_B`: keeps the letters of `keep` and erases the others.
    pub fn projection(alphabet: &Arc<IndependenceAlphabet>, keep: LetterSet) -> Self {
        Endomorphism {
            alphabet: Arc::clone(alphabet),
            images: alphabet
                .letters()
                .map(|a| {
                    if keep.contains(a) {
                        Trace::letter(alphabet, a)
                    } else {
                        Trace::identity(alphabet)
                    }
                })
                .collect(),
        }
    }

    pub fn alphabet(&self) -> &Arc<IndependenceAlphabet> {
        &self.alphabet
    }

    pub fn image(&self, a: Letter) -> &Trace {
        &self.images[a.index()]
    }

    pub fn images(&self) -> &[Trace] {
        &self.images
    }

    /// Letters mapped to the identity.
    pub fn erased_letters(&self) -> LetterSet {
        self.alphabet
            .letters()
            .filter(|a| self.images[a.index()].is_identity())
            .collect()
    }

    /// True when every letter maps to the identity.
    pub fn is_trivial(&self) -> bool {
        self.images.iter().all(Trace::is_identity)
    }

    /// Content of the image of any trace with content `set`.
    pub fn image_content(&self, set: LetterSet) -> LetterSet {
        set.iter()
            .fold(LetterSet::EMPTY, |acc, a| acc.union(self.images[a.index()].content()))
    }

    pub fn apply(&self, u: &Trace) -> Result<Trace> {
        if !same_alphabet(u.alphabet(), &self.alphabet) {
            return Err(Error::AlphabetMismatch);
        }
        Ok(self.apply_unchecked(u))
    }

    pub(crate) fn apply_unchecked(&self, u: &Trace) -> Trace {
        let mut builder = FnfBuilder::new(&self.alphabet);
        for a in u.letters() {
            builder.extend(self.images[a.index()].letters());
        }
        builder.finish()
    }

    /// `φψ`: first `self`, then `then`.
    pub fn compose(&self, then: &Endomorphism) -> Result<Endomorphism> {
        if !same_alphabet(&self.alphabet, &then.alphabet) {
            return Err(Error::AlphabetMismatch);
        }
        Ok(Endomorphism {
            alphabet: Arc::clone(&self.alphabet),
            images: self.images.iter().map(|t| then.apply_unchecked(t)).collect(),
        })
    }

    /// `uφ^n`, with the default orbit budget.
    pub fn iterate_apply(&self, u: &Trace, n: u64) -> Result<Trace> {
        self.iterate_apply_with_budget(u, n, DEFAULT_ORBIT_BUDGET)
    }

    /// `uφ^n`. The orbit is memoized; once `uφ^s = uφ^t` with `s < t` the
    /// answer is read off the cycle, so large `n` costs at most the orbit
    /// length. Fails when an orbit element grows past `budget` letters.
    pub fn iterate_apply_with_budget(&self, u: &Trace, n: u64, budget: usize) -> Result<Trace> {
        if !same_alphabet(u.alphabet(), &self.alphabet) {
            return Err(Error::AlphabetMismatch);
        }
        let mut orbit = vec![u.clone()];
        let mut seen: HashMap<Trace, u64> = HashMap::new();
        seen.insert(u.clone(), 0);
        let mut step = 0u64;
        while step < n {
            let next = self.apply_unchecked(&orbit[step as usize]);
            step += 1;
            if next.len() > budget {
                return Err(Error::OrbitGrowth(budget));
            }
            if let Some(&start) = seen.get(&next) {
                let period = step - start;
                let index = start + (n - start) % period;
                return Ok(orbit[index as usize].clone());
            }
            seen.insert(next.clone(), step);
            orbit.push(next);
        }
        Ok(orbit.pop().expect("orbit is nonempty"))
    }

    /// `φ^n` as an endomorphism.
    pub fn power(&self, n: u64) -> Result<Endomorphism> {
        let images = self
            .alphabet
            .letters()
            .map(|a| self.iterate_apply(&Trace::letter(&self.alphabet, a), n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Endomorphism {
            alphabet: Arc::clone(&self.alphabet),
            images,
        })
    }

    /// Checks the letter criterion for uniform continuity: whenever
    /// `c ≤_p bφ` and `c ∼_I aφ`, the letters `a` and `b` must be independent.
    /// On failure the lexicographically least violating triple is returned.
    pub fn continuity(&self) -> Continuity {
        let alphabet = &self.alphabet;
        for a in alphabet.letters() {
            let image_a = self.images[a.index()].content();
            for b in alphabet.letters() {
                if alphabet.is_independent(a, b) {
                    continue;
                }
                let starts = self.images[b.index()].minimal_letters();
                for c in alphabet.letters() {
                    if starts.contains(c) && image_a.is_subset(alphabet.independent_of(c)) {
                        return Continuity::Witness { a, b, c };
                    }
                }
            }
        }
        Continuity::Uniform
    }

    pub fn is_uniformly_continuous(&self) -> bool {
        self.continuity() == Continuity::Uniform
    }

    pub(crate) fn require_uniformly_continuous(&self) -> Result<()> {
        match self.continuity() {
            Continuity::Uniform => Ok(()),
            Continuity::Witness { a, b, c } => {
                let name = |x: Letter| self.alphabet.name(x).to_string();
                Err(Error::NotUniformlyContinuous(name(a), name(b), name(c)))
            }
        }
    }

    /// The restriction to the submonoid generated by `letters`, as an
    /// endomorphism of the induced sub-alphabet. Every image of a letter in
    /// `letters` must stay inside that submonoid.
    pub fn restrict(&self, letters: LetterSet) -> Result<(Endomorphism, Embedding)> {
        let embedding = self.alphabet.induced(letters);
        let images = embedding
            .sub()
            .letters()
            .map(|a| {
                let image = &self.images[embedding.to_parent(a).index()];
                image.lower(&embedding)
            })
            .collect::<Result<Vec<_>>>()?;
        let endo = Endomorphism {
            alphabet: Arc::clone(embedding.sub()),
            images,
        };
        Ok((endo, embedding))
    }

    /// `(φ π_B)|_B`: apply, then erase letters outside `letters`, restricted
    /// to the submonoid on `letters`.
    pub fn restrict_projected(&self, letters: LetterSet) -> Result<(Endomorphism, Embedding)> {
        let projected = self.compose(&Endomorphism::projection(&self.alphabet, letters))?;
        projected.restrict(letters)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Distance;

    fn alpha(letters: &[&str], pairs: &[(&str, &str)]) -> Arc<IndependenceAlphabet> {
        Arc::new(IndependenceAlphabet::new(letters, pairs).unwrap())
    }

    fn t(alphabet: &Arc<IndependenceAlphabet>, w: &str) -> Trace {
        Trace::parse(alphabet, w).unwrap()
    }

    fn path() -> Arc<IndependenceAlphabet> {
        alpha(&["a", "b", "c"], &[("a", "b"), ("b", "c")])
    }

    #[test]
    fn construction() {
        let g = alpha(&["a", "b", "c"], &[("a", "b")]);
        assert_eq!(
            Endomorphism::from_words(&g, &["a", "c", "c"]),
            Err(Error::NotWellDefined("a".into(), "b".into()))
        );
        assert!(Endomorphism::from_words(&g, &["a", "b", "c"]).is_ok());
        assert!(Endomorphism::from_words(&path(), &["ab", "b", "cb"]).is_ok());
    }

    #[test]
    fn application() {
        let g = alpha(&["a", "b"], &[]);
        let id = Endomorphism::identity(&g);
        assert_eq!(id.apply(&t(&g, "abba")).unwrap(), t(&g, "abba"));
        let phi = Endomorphism::from_words(&g, &["", "ab"]).unwrap();
        assert_eq!(phi.apply(&t(&g, "ab")).unwrap(), t(&g, "ab"));
        let p = path();
        let phi = Endomorphism::from_words(&p, &["ab", "b", "cb"]).unwrap();
        assert_eq!(phi.apply(&t(&p, "ac")).unwrap(), t(&p, "abcb"));
    }

    #[test]
    fn iteration() {
        let g = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::from_words(&g, &["", "ab"]).unwrap();
        assert_eq!(phi.iterate_apply(&t(&g, "b"), 100).unwrap(), t(&g, "ab"));
        assert_eq!(phi.iterate_apply(&t(&g, "b"), 0).unwrap(), t(&g, "b"));
        let swap = Endomorphism::from_words(&g, &["b", "a"]).unwrap();
        for k in 0..5 {
            assert_eq!(swap.iterate_apply(&t(&g, "a"), 2 * k).unwrap(), t(&g, "a"));
            assert_eq!(swap.iterate_apply(&t(&g, "a"), 2 * k + 1).unwrap(), t(&g, "b"));
        }
        assert_eq!(swap.iterate_apply(&t(&g, "ab"), 3_628_800).unwrap(), t(&g, "ab"));
        let double = Endomorphism::from_words(&g, &["aa", "b"]).unwrap();
        assert_eq!(
            double.iterate_apply_with_budget(&t(&g, "a"), 1 << 20, 100),
            Err(Error::OrbitGrowth(100))
        );
        assert_eq!(double.iterate_apply(&t(&g, "a"), 3).unwrap().len(), 8);
    }

    #[test]
    fn composition() {
        let g = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::from_words(&g, &["ab", "b"]).unwrap();
        let swap = Endomorphism::from_words(&g, &["b", "a"]).unwrap();
        let both = phi.compose(&swap).unwrap();
        assert_eq!(both.image(Letter::new(0)), &t(&g, "ba"));
        assert_eq!(phi.power(3).unwrap().image(Letter::new(0)), &t(&g, "abbb"));
    }

    #[test]
    fn uniform_continuity() {
        let p = path();
        let phi = Endomorphism::from_words(&p, &["ab", "b", "cb"]).unwrap();
        assert!(phi.is_uniformly_continuous());
        let g = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::from_words(&g, &["", "b"]).unwrap();
        assert_eq!(
            phi.continuity(),
            Continuity::Witness {
                a: Letter::new(0),
                b: Letter::new(1),
                c: Letter::new(1)
            }
        );
        assert!(Endomorphism::identity(&g).is_uniformly_continuous());
    }

    #[test]
    fn witness_sequences_break_continuity() {
        let g = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::from_words(&g, &["", "b"]).unwrap();
        let Continuity::Witness { a, b, .. } = phi.continuity() else {
            panic!("expected a witness");
        };
        for n in 0..=8 {
            let u = Trace::letter(&g, a).pow(n);
            let v = u.concat(&Trace::letter(&g, b));
            assert_eq!(u.fnf_distance(&v).unwrap(), Distance::PowNeg(n));
            let (x, y) = (phi.apply(&u).unwrap(), phi.apply(&v).unwrap());
            assert_eq!(x.fnf_distance(&y).unwrap(), Distance::PowNeg(0));
        }
    }

    #[test]
    fn restriction() {
        let g = alpha(&["a", "b", "c"], &[("a", "b")]);
        let phi = Endomorphism::from_words(&g, &["b", "a", "ab"]).unwrap();
        let ab = LetterSet::from_bits(0b011);
        let (swap, e) = phi.restrict(ab).unwrap();
        assert_eq!(swap.image(Letter::new(0)).lift(&e), t(&g, "b"));
        assert_eq!(swap.image(Letter::new(1)).lift(&e), t(&g, "a"));
        assert_eq!(phi.restrict(LetterSet::from_bits(0b101)).err(), Some(Error::NotClosed("b".into())));

        let (id, _) = Endomorphism::identity(&g).restrict(LetterSet::from_bits(0b110)).unwrap();
        assert_eq!(id, Endomorphism::identity(id.alphabet()));

        let free = alpha(&["a", "b"], &[]);
        let phi = Endomorphism::from_words(&free, &["", "ab"]).unwrap();
        let (inner, e) = phi.restrict_projected(LetterSet::from_bits(0b10)).unwrap();
        assert_eq!(inner.image(Letter::new(0)).lift(&e), t(&free, "b"));
    }
}
