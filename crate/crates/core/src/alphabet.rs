//! Independence alphabets `(A, I)` viewed as simple undirected graphs.
//!
//! Letters are dense indices into the alphabet's ordered letter list, and
//! letter subsets are 64-bit masks. Every set-valued output is ordered by the
//! letter order fixed at construction.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest supported alphabet.
pub const MAX_LETTERS: usize = 64;

/// Index of a letter in its alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u8);

impl Letter {
    pub fn new(index: usize) -> Self {
        assert!(index < MAX_LETTERS, "letter index {index} out of range");
        Letter(index as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A subset of an alphabet's letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LetterSet(u64);

impl LetterSet {
    pub const EMPTY: LetterSet = LetterSet(0);

    pub fn from_bits(bits: u64) -> Self {
        LetterSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// The first `n` letters.
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            LetterSet(u64::MAX)
        } else {
            LetterSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(a: Letter) -> Self {
        LetterSet(1u64 << a.index())
    }

    pub fn contains(self, a: Letter) -> bool {
        self.0 >> a.index() & 1 == 1
    }

    pub fn insert(&mut self, a: Letter) {
        self.0 |= 1u64 << a.index();
    }

    pub fn remove(&mut self, a: Letter) {
        self.0 &= !(1u64 << a.index());
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: LetterSet) -> LetterSet {
        LetterSet(self.0 | other.0)
    }

    pub fn intersection(self, other: LetterSet) -> LetterSet {
        LetterSet(self.0 & other.0)
    }

    pub fn difference(self, other: LetterSet) -> LetterSet {
        LetterSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: LetterSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Smallest member, if any.
    pub fn first(self) -> Option<Letter> {
        (self.0 != 0).then(|| Letter(self.0.trailing_zeros() as u8))
    }

    /// Members in increasing letter order.
    pub fn iter(self) -> impl Iterator<Item = Letter> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros();
            bits &= bits - 1;
            Some(Letter(i as u8))
        })
    }
}

impl FromIterator<Letter> for LetterSet {
    fn from_iter<T: IntoIterator<Item = Letter>>(iter: T) -> Self {
        let mut set = LetterSet::EMPTY;
        for a in iter {
            set.insert(a);
        }
        set
    }
}

/// A nonempty set of pairwise independent letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clique(LetterSet);

impl Clique {
    /// Wraps `set` without checking it. Callers guarantee the invariant.
    pub(crate) fn new_unchecked(set: LetterSet) -> Self {
        debug_assert!(!set.is_empty());
        Clique(set)
    }

    pub fn letters(self) -> LetterSet {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.len()
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

/// A finite alphabet with a symmetric irreflexive independence relation.
#[derive(Clone)]
pub struct IndependenceAlphabet {
    names: Vec<String>,
    independent: Vec<LetterSet>,
    index: HashMap<String, Letter>,
}

impl PartialEq for IndependenceAlphabet {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.independent == other.independent
    }
}

impl Eq for IndependenceAlphabet {}

impl fmt::Debug for IndependenceAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self
            .independent_pairs()
            .map(|(a, b)| format!("{}-{}", self.name(a), self.name(b)))
            .collect();
        f.debug_struct("IndependenceAlphabet")
            .field("letters", &self.names)
            .field("independent", &edges)
            .finish()
    }
}

impl IndependenceAlphabet {
    /// Builds an alphabet from letter names and independence pairs.
    pub fn new<S, P>(letters: &[S], pairs: &[(P, P)]) -> Result<Self>
    where
        S: AsRef<str>,
        P: AsRef<str>,
    {
        if letters.len() > MAX_LETTERS {
            return Err(Error::TooManyLetters {
                max: MAX_LETTERS,
                got: letters.len(),
            });
        }
        let mut index = HashMap::new();
        let mut names = Vec::with_capacity(letters.len());
        for (i, name) in letters.iter().enumerate() {
            let name = name.as_ref().to_string();
            if index.insert(name.clone(), Letter::new(i)).is_some() {
                return Err(Error::DuplicateLetter(name));
            }
            names.push(name);
        }
        let mut independent = vec![LetterSet::EMPTY; names.len()];
        for (a, b) in pairs {
            let (a, b) = (a.as_ref(), b.as_ref());
            let la = *index
                .get(a)
                .ok_or_else(|| Error::UnknownLetter(a.to_string()))?;
            let lb = *index
                .get(b)
                .ok_or_else(|| Error::UnknownLetter(b.to_string()))?;
            if la == lb {
                return Err(Error::ReflexivePair(a.to_string()));
            }
            independent[la.index()].insert(lb);
            independent[lb.index()].insert(la);
        }
        Ok(IndependenceAlphabet {
            names,
            independent,
            index,
        })
    }

    /// Builds an alphabet from letter names and an adjacency given by index pairs.
    pub fn from_index_pairs<S: AsRef<str>>(letters: &[S], pairs: &[(usize, usize)]) -> Result<Self> {
        let named: Vec<(String, String)> = pairs
            .iter()
            .map(|&(a, b)| {
                let name = |i: usize| {
                    letters
                        .get(i)
                        .map(|s| s.as_ref().to_string())
                        .unwrap_or_else(|| format!("#{i}"))
                };
                (name(a), name(b))
            })
            .collect();
        Self::new(letters, &named)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.names.len()).map(Letter::new)
    }

    pub fn all(&self) -> LetterSet {
        LetterSet::full(self.names.len())
    }

    pub fn name(&self, a: Letter) -> &str {
        &self.names[a.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn letter(&self, name: &str) -> Result<Letter> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownLetter(name.to_string()))
    }

    pub fn is_independent(&self, a: Letter, b: Letter) -> bool {
        self.independent[a.index()].contains(b)
    }

    /// Letters independent of `a`.
    pub fn independent_of(&self, a: Letter) -> LetterSet {
        self.independent[a.index()]
    }

    /// Letters dependent on `a`, including `a` itself.
    pub fn dependent_on(&self, a: Letter) -> LetterSet {
        self.all().difference(self.independent[a.index()])
    }

    /// Independence pairs `(a, b)` with `a < b`, in lexicographic order.
    pub fn independent_pairs(&self) -> impl Iterator<Item = (Letter, Letter)> + '_ {
        self.letters().flat_map(move |a| {
            self.independent[a.index()]
                .iter()
                .filter(move |&b| a < b)
                .map(move |b| (a, b))
        })
    }

    /// Pairs `(a, b)` with `a <= b` that are not independent, `a = b` included.
    pub fn dependent_pairs(&self) -> impl Iterator<Item = (Letter, Letter)> + '_ {
        self.letters().flat_map(move |a| {
            self.dependent_on(a)
                .iter()
                .filter(move |&b| a <= b)
                .map(move |b| (a, b))
        })
    }

    pub fn is_clique(&self, set: LetterSet) -> bool {
        !set.is_empty()
            && set
                .iter()
                .all(|a| set.difference(LetterSet::singleton(a)).is_subset(self.independent[a.index()]))
    }

    pub fn clique(&self, set: LetterSet) -> Option<Clique> {
        (set.is_subset(self.all()) && self.is_clique(set)).then_some(Clique(set))
    }

    /// Every clique, ordered by size and then lexicographically.
    pub fn cliques(&self) -> Vec<Clique> {
        let mut out = Vec::new();
        let mut current = Vec::new();
        self.extend_cliques(0, LetterSet::EMPTY, &mut current, &mut out);
        out.sort_by(|a, b| {
            a.len().cmp(&b.len()).then_with(|| {
                let la: Vec<Letter> = a.letters().iter().collect();
                let lb: Vec<Letter> = b.letters().iter().collect();
                la.cmp(&lb)
            })
        });
        out
    }

    fn extend_cliques(&self, from: usize, set: LetterSet, current: &mut Vec<Letter>, out: &mut Vec<Clique>) {
        for i in from..self.len() {
            let a = Letter::new(i);
            if set.is_subset(self.independent[i]) {
                let next = set.union(LetterSet::singleton(a));
                out.push(Clique(next));
                current.push(a);
                self.extend_cliques(i + 1, next, current, out);
                current.pop();
            }
        }
    }

    /// Connected components of the graph, each ordered by its least letter.
    pub fn connected_components(&self) -> Vec<LetterSet> {
        let mut seen = LetterSet::EMPTY;
        let mut components = Vec::new();
        for a in self.letters() {
            if seen.contains(a) {
                continue;
            }
            let mut component = LetterSet::singleton(a);
            let mut frontier = vec![a];
            while let Some(x) = frontier.pop() {
                for y in self.independent[x.index()].iter() {
                    if !component.contains(y) {
                        component.insert(y);
                        frontier.push(y);
                    }
                }
            }
            seen = seen.union(component);
            components.push(component);
        }
        components
    }

    /// Index of the component containing `a` in [`Self::connected_components`].
    pub fn component_index(&self, components: &[LetterSet], a: Letter) -> usize {
        components
            .iter()
            .position(|c| c.contains(a))
            .expect("components partition the alphabet")
    }

    /// True when every connected component is a complete graph.
    pub fn is_clique_union(&self) -> bool {
        self.connected_components()
            .into_iter()
            .all(|c| self.is_clique(c))
    }

    /// True when `I ∪ Δ_A` is a transitive relation.
    pub fn independence_is_transitive(&self) -> bool {
        self.letters().all(|a| {
            self.independent[a.index()].iter().all(|b| {
                self.independent[b.index()]
                    .iter()
                    .all(|c| c == a || self.is_independent(a, c))
            })
        })
    }

    /// True when the graph has none of the three forbidden induced subgraphs:
    /// the path on four vertices, the four-cycle, and the five-vertex graph
    /// with triangle `{a, b, y}`, a pendant `x` on `b`, and `c` adjacent to
    /// exactly `b` and `y`. The last pattern is read off a drawing.
    pub fn is_type_t(&self) -> bool {
        FORBIDDEN.iter().all(|pattern| !self.has_induced(pattern))
    }

    /// Brute-force induced-subgraph test for a small pattern graph.
    pub fn has_induced(&self, pattern: &Pattern) -> bool {
        let mut image = Vec::with_capacity(pattern.vertices);
        self.embed(pattern, &mut image)
    }

    fn embed(&self, pattern: &Pattern, image: &mut Vec<Letter>) -> bool {
        let i = image.len();
        if i == pattern.vertices {
            return true;
        }
        for a in self.letters() {
            if image.contains(&a) {
                continue;
            }
            let consistent = image
                .iter()
                .enumerate()
                .all(|(j, &b)| pattern.adjacent(i, j) == self.is_independent(a, b));
            if consistent {
                image.push(a);
                if self.embed(pattern, image) {
                    return true;
                }
                image.pop();
            }
        }
        false
    }

    /// The sub-alphabet induced by `set`, with letters in parent order.
    pub fn induced(self: &Arc<Self>, set: LetterSet) -> Embedding {
        let to_parent: Vec<Letter> = set.intersection(self.all()).iter().collect();
        let mut from_parent = vec![None; self.len()];
        for (i, a) in to_parent.iter().enumerate() {
            from_parent[a.index()] = Some(Letter::new(i));
        }
        let names: Vec<String> = to_parent.iter().map(|&a| self.names[a.index()].clone()).collect();
        let independent = to_parent
            .iter()
            .map(|&a| {
                self.independent[a.index()]
                    .iter()
                    .filter_map(|b| from_parent[b.index()])
                    .collect()
            })
            .collect();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), Letter::new(i)))
            .collect();
        Embedding {
            sub: Arc::new(IndependenceAlphabet {
                names,
                independent,
                index,
            }),
            parent: Arc::clone(self),
            to_parent,
            from_parent,
        }
    }

    /// Parses a word: whitespace-separated letter names, or a contiguous
    /// string when every letter name is a single character.
    pub fn parse_word(&self, text: &str) -> Result<Vec<Letter>> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Vec::new());
        }
        if text.split_whitespace().nth(1).is_some() || self.index.contains_key(text) {
            return text.split_whitespace().map(|t| self.letter(t)).collect();
        }
        if self.names.iter().all(|n| n.chars().count() == 1) {
            return text.chars().map(|c| self.letter(c.encode_utf8(&mut [0; 4]))).collect();
        }
        Err(Error::UnknownLetter(text.to_string()))
    }

    /// Formats a letter set as `{a,b}`.
    pub fn format_set(&self, set: LetterSet) -> String {
        let names: Vec<&str> = set.iter().map(|a| self.name(a)).collect();
        format!("{{{}}}", names.join(","))
    }
}

/// A small pattern graph on vertices `0..vertices`.
#[derive(Debug, Clone)]
pub struct Pattern {
    pub vertices: usize,
    pub edges: &'static [(usize, usize)],
}

impl Pattern {
    fn adjacent(&self, i: usize, j: usize) -> bool {
        self.edges
            .iter()
            .any(|&(x, y)| (x, y) == (i, j) || (y, x) == (i, j))
    }
}

pub const PATH4: Pattern = Pattern {
    vertices: 4,
    edges: &[(0, 1), (1, 2), (2, 3)],
};

pub const CYCLE4: Pattern = Pattern {
    vertices: 4,
    edges: &[(0, 1), (1, 2), (2, 3), (3, 0)],
};

/// Vertices `a b y x c`: triangle `a b y`, `x` hangs off `b`, `c` sees `b` and `y`.
pub const TRIANGLE_WITH_TAILS: Pattern = Pattern {
    vertices: 5,
    edges: &[(0, 1), (0, 2), (1, 2), (1, 3), (1, 4), (2, 4)],
};

const FORBIDDEN: [Pattern; 3] = [PATH4, CYCLE4, TRIANGLE_WITH_TAILS];

/// An induced sub-alphabet together with its letter correspondence.
#[derive(Debug, Clone)]
pub struct Embedding {
    sub: Arc<IndependenceAlphabet>,
    parent: Arc<IndependenceAlphabet>,
    to_parent: Vec<Letter>,
    from_parent: Vec<Option<Letter>>,
}

impl Embedding {
    pub fn sub(&self) -> &Arc<IndependenceAlphabet> {
        &self.sub
    }

    pub fn parent(&self) -> &Arc<IndependenceAlphabet> {
        &self.parent
    }

    pub fn to_parent(&self, a: Letter) -> Letter {
        self.to_parent[a.index()]
    }

    pub fn from_parent(&self, a: Letter) -> Option<Letter> {
        self.from_parent[a.index()]
    }

    pub fn lift_set(&self, set: LetterSet) -> LetterSet {
        set.iter().map(|a| self.to_parent(a)).collect()
    }

    /// The parent letters covered by the sub-alphabet.
    pub fn support(&self) -> LetterSet {
        self.to_parent.iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha(letters: &[&str], pairs: &[(&str, &str)]) -> IndependenceAlphabet {
        IndependenceAlphabet::new(letters, pairs).unwrap()
    }

    fn set(alphabet: &IndependenceAlphabet, names: &[&str]) -> LetterSet {
        names.iter().map(|n| alphabet.letter(n).unwrap()).collect()
    }

    fn graph(n: usize, edges: &[(usize, usize)]) -> IndependenceAlphabet {
        let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        IndependenceAlphabet::from_index_pairs(&names, edges).unwrap()
    }

    #[test]
    fn validation() {
        let ab = alpha(&["a", "b"], &[("a", "b")]);
        assert!(ab.is_independent(Letter::new(0), Letter::new(1)));
        assert!(ab.is_independent(Letter::new(1), Letter::new(0)));
        assert_eq!(
            IndependenceAlphabet::new(&["a"], &[("a", "a")]),
            Err(Error::ReflexivePair("a".into()))
        );
        assert_eq!(
            IndependenceAlphabet::new(&["a"], &[("a", "z")]),
            Err(Error::UnknownLetter("z".into()))
        );
        let path = alpha(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        assert_eq!(path.independent_pairs().count(), 2);
    }

    #[test]
    fn clique_listing() {
        let g = alpha(&["a", "b", "c"], &[("a", "b")]);
        let got: Vec<LetterSet> = g.cliques().into_iter().map(Clique::letters).collect();
        let want = vec![
            set(&g, &["a"]),
            set(&g, &["b"]),
            set(&g, &["c"]),
            set(&g, &["a", "b"]),
        ];
        assert_eq!(got, want);
        assert_eq!(alpha(&["a"], &[]).cliques().len(), 1);
        let tri = alpha(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")]);
        assert_eq!(tri.cliques().len(), 7);
    }

    #[test]
    fn components() {
        let free = alpha(&["a", "b"], &[]);
        assert_eq!(free.connected_components(), vec![set(&free, &["a"]), set(&free, &["b"])]);
        let tri = alpha(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")]);
        assert_eq!(tri.connected_components(), vec![tri.all()]);
        let path = alpha(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        assert_eq!(path.connected_components(), vec![path.all()]);
    }

    #[test]
    fn clique_unions() {
        let path = alpha(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        assert!(!path.is_clique_union());
        assert!(alpha(&["a", "b"], &[]).is_clique_union());
        let g = alpha(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c"), ("a", "c")]);
        assert!(g.is_clique_union());
    }

    #[test]
    fn type_t_examples() {
        assert!(!graph(4, &[(0, 1), (1, 2), (2, 3)]).is_type_t());
        assert!(!graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).is_type_t());
        assert!(!graph(5, TRIANGLE_WITH_TAILS.edges).is_type_t());
        assert!(graph(3, &[(0, 1), (1, 2)]).is_type_t());
        assert!(graph(5, &[(0, 1), (2, 3), (3, 4), (2, 4)]).is_type_t());
    }

    #[test]
    fn third_pattern_avoids_the_first_two() {
        let g = graph(5, TRIANGLE_WITH_TAILS.edges);
        assert!(!g.has_induced(&PATH4));
        assert!(!g.has_induced(&CYCLE4));
    }

    /// Every labelled graph on `n` vertices.
    fn all_graphs(n: usize) -> Vec<IndependenceAlphabet> {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        (0..1u32 << pairs.len())
            .map(|mask| {
                let edges: Vec<(usize, usize)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .map(|(_, &p)| p)
                    .collect();
                graph(n, &edges)
            })
            .collect()
    }

    #[test]
    fn clique_union_is_transitivity_and_implies_type_t() {
        for n in 0..=6 {
            for g in all_graphs(n) {
                assert_eq!(g.is_clique_union(), g.independence_is_transitive(), "{g:?}");
                if g.is_clique_union() {
                    assert!(g.is_type_t(), "{g:?}");
                }
            }
        }
    }

    #[test]
    fn cliques_closed_under_subsets() {
        for g in all_graphs(4) {
            let cliques: Vec<LetterSet> = g.cliques().into_iter().map(Clique::letters).collect();
            for &c in &cliques {
                for a in c.iter() {
                    let mut sub = c;
                    sub.remove(a);
                    assert!(sub.is_empty() || cliques.contains(&sub));
                }
            }
        }
    }

    #[test]
    fn word_parsing() {
        let g = alpha(&["a", "b"], &[]);
        let (a, b) = (Letter::new(0), Letter::new(1));
        assert_eq!(g.parse_word("ab").unwrap(), vec![a, b]);
        assert_eq!(g.parse_word("a b a").unwrap(), vec![a, b, a]);
        assert_eq!(g.parse_word("").unwrap(), vec![]);
        assert!(g.parse_word("ax").is_err());
        let long = alpha(&["x1", "x2"], &[]);
        assert_eq!(long.parse_word("x2 x1").unwrap(), vec![b, a]);
        assert_eq!(long.parse_word("x2").unwrap(), vec![b]);
        assert!(long.parse_word("x1x2").is_err());
    }

    #[test]
    fn induced_alphabet() {
        let g = Arc::new(alpha(&["a", "b", "c"], &[("a", "c")]));
        let e = g.induced(set(&g, &["a", "c"]));
        assert_eq!(e.sub().names(), &["a".to_string(), "c".to_string()]);
        assert!(e.sub().is_independent(Letter::new(0), Letter::new(1)));
        assert_eq!(e.to_parent(Letter::new(1)), Letter::new(2));
        assert_eq!(e.from_parent(Letter::new(1)), None);
    }
}
