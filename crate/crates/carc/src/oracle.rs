//! Brute-force reference implementations. These share no code with the
//! structures they validate: conformal models are found by exhaustive search
//! over chord diagrams, isomorphism by backtracking, modules by subset
//! enumeration.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graphs::{Graph, VertexSet};
use crate::models::{graph_of_word, ArcModel, ConformalChecker};
use crate::words::{CircularWord, Letter};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance size {0} exceeds the oracle cap {1}")]
    SizeExceeded(usize, usize),
    #[error("cache parse error: {0}")]
    BadCache(String),
}

/// Small deterministic xorshift generator for randomized desk-scale tests.
#[derive(Clone)]
pub struct XorShift64 {
    state: u64,
}

impl XorShift64 {
    pub fn new(seed: u64) -> Self {
        XorShift64 { state: seed.max(1) }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.state = x;
        x
    }

    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Iterates over all circular words with letters `{v^0, v^1 : v < n}`, one
/// representative per rotation class (the letter `v0^0` is pinned first).
pub struct WordEnumerator {
    rest: Vec<Letter>,
    first: Letter,
    done: bool,
    fresh: bool,
}

impl WordEnumerator {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut rest: Vec<Letter> = Vec::new();
        for v in 0..n {
            for b in [0u8, 1u8] {
                if v != 0 || b != 0 {
                    rest.push(Letter::sup(v, b));
                }
            }
        }
        rest.sort();
        WordEnumerator { rest, first: Letter::sup(0, 0), done: false, fresh: true }
    }

    /// Total number of rotation classes: (2n-1)!.
    pub fn count(n: usize) -> u64 {
        (1..=(2 * n as u64 - 1)).product()
    }
}

impl Iterator for WordEnumerator {
    type Item = CircularWord;

    fn next(&mut self) -> Option<CircularWord> {
        if self.done {
            return None;
        }
        if !self.fresh && !next_permutation(&mut self.rest) {
            self.done = true;
            return None;
        }
        self.fresh = false;
        let mut letters = Vec::with_capacity(self.rest.len() + 1);
        letters.push(self.first);
        letters.extend_from_slice(&self.rest);
        Some(CircularWord::new(letters))
    }
}

fn next_permutation<T: Ord>(arr: &mut [T]) -> bool {
    let n = arr.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && arr[i - 1] >= arr[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while arr[j] <= arr[i - 1] {
        j -= 1;
    }
    arr.swap(i - 1, j);
    arr[i..].reverse();
    true
}

/// All arc models on `n` vertices, one per rotation class of endpoint words.
pub fn gen_arc_models(n: usize) -> Result<impl Iterator<Item = ArcModel>, OracleError> {
    if n > 6 {
        return Err(OracleError::SizeExceeded(n, 6));
    }
    Ok(WordEnumerator::new(n).map(move |w| {
        let graph = graph_of_word(&w, n).expect("enumerated word is a model");
        ArcModel { word: w, graph }
    }))
}

/// Backtracking isomorphism test with degree pruning.
pub fn brute_iso(g: &Graph, h: &Graph) -> Result<bool, OracleError> {
    let n = g.n();
    if n.max(h.n()) > 9 {
        return Err(OracleError::SizeExceeded(n.max(h.n()), 9));
    }
    if n != h.n() || g.edges().len() != h.edges().len() {
        return Ok(false);
    }
    let mut dg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut dh: Vec<usize> = (0..n).map(|v| h.degree(v)).collect();
    dg.sort();
    dh.sort();
    if dg != dh {
        return Ok(false);
    }
    // Map vertices of g in decreasing degree order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(g.degree(v)));
    let mut image: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; n];
    fn extend(
        g: &Graph,
        h: &Graph,
        order: &[usize],
        at: usize,
        image: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
    ) -> bool {
        if at == order.len() {
            return true;
        }
        let v = order[at];
        for w in 0..h.n() {
            if used[w] || g.degree(v) != h.degree(w) {
                continue;
            }
            let ok = order[..at].iter().all(|&p| {
                let q = image[p].unwrap();
                g.has_edge(v, p) == h.has_edge(w, q)
            });
            if ok {
                image[v] = Some(w);
                used[w] = true;
                if extend(g, h, order, at + 1, image, used) {
                    return true;
                }
                image[v] = None;
                used[w] = false;
            }
        }
        false
    }
    Ok(extend(g, h, &order, 0, &mut image, &mut used))
}

/// All conformal models of `g` as rotation classes, by exhaustive search over
/// oriented chord diagrams.
pub fn brute_conformal_models(g: &Graph) -> Result<BTreeSet<CircularWord>, OracleError> {
    let n = g.n();
    if n > 6 {
        return Err(OracleError::SizeExceeded(n, 6));
    }
    let all: BTreeSet<usize> = (0..n).collect();
    let checker = ConformalChecker::new(g, &all);
    let mut out = BTreeSet::new();
    for w in WordEnumerator::new(n) {
        if checker.check(&w) {
            out.insert(w);
        }
    }
    Ok(out)
}

/// All modules of `g` (by subset filtering).
pub fn brute_modules(g: &Graph) -> Result<Vec<VertexSet>, OracleError> {
    let n = g.n();
    if n > 7 {
        return Err(OracleError::SizeExceeded(n, 7));
    }
    let mut out = Vec::new();
    for mask in 1u64..(1 << n) {
        let x = VertexSet::from_iter(n, (0..n).filter(|&v| mask >> v & 1 == 1));
        if crate::moddecomp::is_module(g, &x) {
            out.push(x);
        }
    }
    Ok(out)
}

/// The strong modules among `modules`: those nested-or-disjoint with every other.
pub fn strong_modules_of(modules: &[VertexSet]) -> Vec<VertexSet> {
    modules
        .iter()
        .filter(|x| {
            modules.iter().all(|y| {
                x.is_subset(y) || y.is_subset(x) || x.is_disjoint(y)
            })
        })
        .cloned()
        .collect()
}

/// An exhaustive corpus of twin-free, universal-free circular-arc graphs with
/// their witnessing arc models, deduplicated by brute-force isomorphism.
pub struct Corpus {
    pub entries: Vec<(Graph, ArcModel)>,
    pub n_max: usize,
}

impl Corpus {
    /// All such graphs arising from arc models with at most `n_max` vertices.
    pub fn build(n_max: usize) -> Result<Corpus, OracleError> {
        let mut entries: Vec<(Graph, ArcModel)> = Vec::new();
        for n in 1..=n_max {
            let mut local: Vec<(Graph, ArcModel)> = Vec::new();
            for m in gen_arc_models(n)? {
                let reduced = (0..n).all(|v| !(n > 1 && m.graph.is_universal(v)))
                    && !(n == 1)
                    && (0..n).all(|v| (v + 1..n).all(|u| !m.graph.are_twins(v, u)));
                if !reduced {
                    continue;
                }
                let mut known = false;
                for (h, _) in &local {
                    if brute_iso(&m.graph, h)? {
                        known = true;
                        break;
                    }
                }
                if !known {
                    local.push((m.graph.clone(), m));
                }
            }
            entries.extend(local);
        }
        Ok(Corpus { entries, n_max })
    }
}

/// Serializes arc-model words: a header line `n=<n> count=<k>`, then one word
/// per line as comma-separated `v<id>^<bit>` tokens.
pub fn write_cache(n: usize, models: &[ArcModel]) -> String {
    let mut out = String::new();
    writeln!(out, "n={} count={}", n, models.len()).unwrap();
    for m in models {
        let tokens: Vec<String> = m.word.letters().iter().map(|l| l.to_string()).collect();
        writeln!(out, "{}", tokens.join(",")).unwrap();
    }
    out
}

/// Parses the format produced by [`write_cache`].
pub fn read_cache(text: &str) -> Result<(usize, Vec<ArcModel>), OracleError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| OracleError::BadCache("empty".into()))?;
    let mut n = None;
    let mut count = None;
    for part in header.split_whitespace() {
        if let Some(v) = part.strip_prefix("n=") {
            n = v.parse().ok();
        } else if let Some(v) = part.strip_prefix("count=") {
            count = v.parse().ok();
        }
    }
    let (n, count): (usize, usize) = match (n, count) {
        (Some(n), Some(c)) => (n, c),
        _ => return Err(OracleError::BadCache(format!("bad header {header:?}"))),
    };
    let mut models = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let letters: Result<Vec<Letter>, String> =
            line.trim().split(',').map(|t| t.trim().parse()).collect();
        let letters = letters.map_err(OracleError::BadCache)?;
        let word = CircularWord::new(letters);
        let graph = graph_of_word(&word, n)
            .map_err(|e| OracleError::BadCache(e.to_string()))?;
        models.push(ArcModel { word, graph });
    }
    if models.len() != count {
        return Err(OracleError::BadCache(format!(
            "header promised {count} models, found {}",
            models.len()
        )));
    }
    Ok((n, models))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gen_counts() {
        assert_eq!(gen_arc_models(1).unwrap().count(), 1);
        assert_eq!(gen_arc_models(2).unwrap().count(), 6);
        assert_eq!(WordEnumerator::count(2), 6);
        assert_eq!(WordEnumerator::count(5), 362880);
    }

    #[test]
    fn n2_intersection_patterns() {
        // Among the 6 words on two vertices: overlap, disjoint, containment
        // and covering all appear.
        use crate::graphs::PairRelation;
        use crate::models::geometric_relation;
        let mut seen = BTreeSet::new();
        for m in gen_arc_models(2).unwrap() {
            seen.insert(format!("{:?}", geometric_relation(&m.word, 0, 1)));
        }
        for rel in [
            PairRelation::Overlap,
            PairRelation::Disjoint,
            PairRelation::Contains,
            PairRelation::CoverCircle,
        ] {
            assert!(seen.contains(&format!("{rel:?}")), "missing {rel:?}");
        }
    }

    #[test]
    fn brute_iso_basics() {
        let p4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        assert!(brute_iso(&p4, &p4).unwrap());
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]);
        assert!(!brute_iso(&p4, &star).unwrap());
        let relabeled = Graph::from_edges(4, &[(2, 0), (0, 3), (3, 1)]);
        assert!(brute_iso(&p4, &relabeled).unwrap());
        assert!(brute_iso(&Graph::new(10), &Graph::new(10)).is_err());
    }

    #[test]
    fn brute_modules_p4_and_k3() {
        let p4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let mods = brute_modules(&p4).unwrap();
        // P4 is prime: only trivial modules.
        assert_eq!(mods.len(), 5);
        let k3 = Graph::from_edges(3, &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(brute_modules(&k3).unwrap().len(), 7);
    }

    #[test]
    fn strong_modules_match_md_tree() {
        let p4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let mods = brute_modules(&p4).unwrap();
        let strong = strong_modules_of(&mods);
        let tree = crate::moddecomp::modular_decomposition(&p4);
        let mut a: Vec<Vec<usize>> = strong.iter().map(|s| s.to_vec()).collect();
        let mut b: Vec<Vec<usize>> =
            tree.strong_modules().iter().map(|s| s.to_vec()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn corpus_small() {
        let c = Corpus::build(3).unwrap();
        // n=1: single vertex is universal. n=2: only 2K1. n=3: 3K1, K1+2K1's
        // non-twin variants etc.
        assert!(c.entries.iter().all(|(g, m)| {
            crate::models::graph_of_word(&m.word, g.n())
                .map(|d| d.edges() == g.edges())
                .unwrap_or(false)
        }));
        assert!(!c.entries.is_empty());
        for i in 0..c.entries.len() {
            for j in i + 1..c.entries.len() {
                if c.entries[i].0.n() == c.entries[j].0.n() {
                    assert!(!brute_iso(&c.entries[i].0, &c.entries[j].0).unwrap());
                }
            }
        }
    }

    #[test]
    fn cache_round_trip() {
        let models: Vec<ArcModel> = gen_arc_models(2).unwrap().collect();
        let text = write_cache(2, &models);
        let (n, back) = read_cache(&text).unwrap();
        assert_eq!(n, 2);
        assert_eq!(back.len(), models.len());
        for (a, b) in back.iter().zip(&models) {
            assert_eq!(a.word, b.word);
        }
    }
}
