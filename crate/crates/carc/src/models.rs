//! Circular-arc models, the normalized-model checker and normalizer, oriented
//! chord models, and the conversions between normalized arc models and
//! conformal chord models.
//!
//! Geometry is purely combinatorial: arcs and chords are positions in a
//! circular word, never coordinates. The arc of `v` is the clockwise segment
//! from `v^0` to `v^1`; the left side of the chord of `v` is the clockwise
//! interior of the same segment.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graphs::{classify_pair, left_right_sets, overlap_graph, Graph, GraphError, PairRelation};
use crate::words::{CircularWord, Letter};

/// An arc model: a circular word over `V*` in which `v^0` marks the clockwise
/// start of `v`'s arc and `v^1` its end, together with the graph it models.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcModel {
    pub word: CircularWord,
    pub graph: Graph,
}

/// An oriented chord model of an overlap graph; the chord of `v` runs from
/// `v^0` to `v^1` and two chords cross exactly for overlap pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChordModel {
    pub word: CircularWord,
    pub graph: Graph,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("word is not an arc model: {0}")]
    BadWord(String),
    #[error("arcs of {0} and {1} intersect but the vertices are non-adjacent")]
    NotAModel(usize, usize),
    #[error("graph has twins or universal vertices: {0}")]
    NotReduced(GraphError),
    #[error("normalization did not reach a fixpoint within {0} extension steps")]
    BudgetExceeded(usize),
    #[error("pair ({0},{1}) cannot be repaired by extending arcs")]
    Unrepairable(usize, usize),
    #[error("chord model is not conformal to the graph")]
    NotConformal,
}

/// Checks that `word` consists of exactly the letters `v^0`, `v^1` for
/// `v < n` and returns the derived intersection graph.
pub fn graph_of_word(word: &CircularWord, n: usize) -> Result<Graph, ModelError> {
    if word.len() != 2 * n {
        return Err(ModelError::BadWord(format!(
            "expected {} letters, found {}",
            2 * n,
            word.len()
        )));
    }
    for v in 0..n {
        for b in [0, 1] {
            if !word.contains(Letter::sup(v, b)) {
                return Err(ModelError::BadWord(format!("missing letter v{v}^{b}")));
            }
        }
    }
    let mut g = Graph::new(n);
    for v in 0..n {
        for u in v + 1..n {
            if geometric_relation(word, v, u) != PairRelation::Disjoint {
                g.add_edge(v, u);
            }
        }
    }
    Ok(g)
}

impl ArcModel {
    /// Builds the model whose graph is derived from the word itself.
    pub fn from_word(word: CircularWord, n: usize) -> Result<ArcModel, ModelError> {
        let graph = graph_of_word(&word, n)?;
        Ok(ArcModel { word, graph })
    }

    /// Wraps a word as a model of a given graph, verifying that the arcs
    /// realize exactly its edges.
    pub fn new(word: CircularWord, graph: Graph) -> Result<ArcModel, ModelError> {
        let derived = graph_of_word(&word, graph.n())?;
        for v in 0..graph.n() {
            for u in v + 1..graph.n() {
                if derived.has_edge(v, u) != graph.has_edge(v, u) {
                    return Err(ModelError::NotAModel(v, u));
                }
            }
        }
        Ok(ArcModel { word, graph })
    }

    pub fn reflect(&self) -> ArcModel {
        ArcModel { word: self.word.reflect(), graph: self.graph.clone() }
    }
}

/// Number of positions passed when moving clockwise from `a` to `b`.
fn cw_dist(n: usize, a: usize, b: usize) -> usize {
    (b + n - a) % n
}

/// True iff position `x` lies strictly between positions `a` and `b` clockwise.
fn strictly_between_pos(n: usize, a: usize, b: usize, x: usize) -> bool {
    let d = cw_dist(n, a, x);
    d > 0 && d < cw_dist(n, a, b)
}

/// The relation realized by the arcs of the ordered pair `(v, u)` in `word`.
pub fn geometric_relation(word: &CircularWord, v: usize, u: usize) -> PairRelation {
    let n = word.len();
    let v0 = word.position_of(Letter::sup(v, 0)).expect("v^0 present");
    let v1 = word.position_of(Letter::sup(v, 1)).expect("v^1 present");
    let u0 = word.position_of(Letter::sup(u, 0)).expect("u^0 present");
    let u1 = word.position_of(Letter::sup(u, 1)).expect("u^1 present");
    let in0 = strictly_between_pos(n, v0, v1, u0);
    let in1 = strictly_between_pos(n, v0, v1, u1);
    match (in0, in1) {
        (true, true) => {
            if cw_dist(n, v0, u0) < cw_dist(n, v0, u1) {
                PairRelation::Contains
            } else {
                PairRelation::CoverCircle
            }
        }
        (false, false) => {
            if cw_dist(n, v1, u0) < cw_dist(n, v1, u1) {
                PairRelation::Disjoint
            } else {
                PairRelation::ContainedIn
            }
        }
        _ => PairRelation::Overlap,
    }
}

/// A failed normalization condition for an ordered vertex pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Arc intersection disagrees with the edge set: the model does not model G.
    Intersection { v: usize, u: usize, edge: bool },
    /// Arcs intersect as required but realize the wrong relation.
    Relation { v: usize, u: usize, expected: PairRelation, actual: PairRelation },
}

/// All normalization violations of `m` with respect to `g`, in (v, u) order.
pub fn check_normalized(g: &Graph, m: &ArcModel) -> Vec<Violation> {
    let mut out = Vec::new();
    for v in 0..g.n() {
        for u in 0..g.n() {
            if v == u {
                continue;
            }
            let expected = classify_pair(g, v, u).expect("distinct");
            let actual = geometric_relation(&m.word, v, u);
            if expected == actual {
                continue;
            }
            if (actual == PairRelation::Disjoint) != (expected == PairRelation::Disjoint) {
                out.push(Violation::Intersection { v, u, edge: g.has_edge(v, u) });
            } else {
                out.push(Violation::Relation { v, u, expected, actual });
            }
        }
    }
    out
}

/// Mutable word wrapper for single-letter arc extensions.
struct Repairer {
    letters: Vec<Letter>,
    trace: Vec<ExtensionStep>,
}

impl Repairer {
    fn pos(&self, l: Letter) -> usize {
        self.letters.iter().position(|&x| x == l).unwrap()
    }

    fn at(&self, i: usize) -> Letter {
        self.letters[i % self.letters.len()]
    }

    /// Moves letter `l` one position clockwise (swapping it with its successor).
    fn step_cw(&mut self, l: Letter) {
        let n = self.letters.len();
        let p = self.pos(l);
        self.letters.swap(p, (p + 1) % n);
        self.trace.push(ExtensionStep {
            vertex: l.symbol,
            endpoint: l.superscript.expect("arc endpoint"),
            clockwise: true,
        });
    }

    /// Moves letter `l` one position counterclockwise.
    fn step_ccw(&mut self, l: Letter) {
        let n = self.letters.len();
        let p = self.pos(l);
        self.letters.swap(p, (p + n - 1) % n);
        self.trace.push(ExtensionStep {
            vertex: l.symbol,
            endpoint: l.superscript.expect("arc endpoint"),
            clockwise: false,
        });
    }

    fn word(&self) -> CircularWord {
        CircularWord::new(self.letters.clone())
    }
}

/// One endpoint move of the normalization loop. A start letter (`endpoint` 0)
/// moving counterclockwise or an end letter moving clockwise grows the arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExtensionStep {
    pub vertex: usize,
    pub endpoint: u8,
    pub clockwise: bool,
}

impl ExtensionStep {
    /// True iff the move grows the arc (the only kind the loop performs).
    pub fn is_extension(&self) -> bool {
        (self.endpoint == 1) == self.clockwise
    }
}

/// Turns an arbitrary model of `g` into a normalized one by repeatedly
/// extending arcs, one endpoint step at a time, until the checker is clean.
///
/// Each step moves one arc endpoint past a single blocking letter; a step is
/// taken only when the crossed letter belongs to a neighbor of the extended
/// vertex, so no false intersection is ever created. The loop errs after
/// `4n^2` steps, which signals an input that was not a model of `g`.
pub fn normalize(g: &Graph, m: &ArcModel) -> Result<ArcModel, ModelError> {
    normalize_traced(g, m).map(|(out, _)| out)
}

/// [`normalize`] plus the trace of endpoint moves it performed.
pub fn normalize_traced(
    g: &Graph,
    m: &ArcModel,
) -> Result<(ArcModel, Vec<ExtensionStep>), ModelError> {
    let n = g.n();
    for v in 0..n {
        if n > 1 && g.is_universal(v) {
            return Err(ModelError::NotReduced(GraphError::HasUniversal(v)));
        }
        for u in v + 1..n {
            if g.are_twins(v, u) {
                return Err(ModelError::NotReduced(GraphError::HasTwins(v, u)));
            }
            let intersect = geometric_relation(&m.word, v, u) != PairRelation::Disjoint;
            if intersect && !g.has_edge(v, u) {
                return Err(ModelError::NotAModel(v, u));
            }
        }
    }

    let mut expected = vec![vec![PairRelation::Overlap; n]; n];
    for v in 0..n {
        for u in 0..n {
            if v != u {
                expected[v][u] = classify_pair(g, v, u).expect("distinct");
            }
        }
    }

    let mut rep = Repairer { letters: m.word.letters().to_vec(), trace: Vec::new() };
    let budget = 4 * n * n;
    loop {
        let word = rep.word();
        let mut violations = Vec::new();
        for v in 0..n {
            for u in 0..n {
                if v == u {
                    continue;
                }
                let actual = geometric_relation(&word, v, u);
                if actual != expected[v][u] {
                    violations.push((v, u, expected[v][u], actual));
                }
            }
        }
        if violations.is_empty() {
            return Ok((ArcModel { word, graph: g.clone() }, rep.trace));
        }
        if rep.trace.len() >= budget {
            return Err(ModelError::BudgetExceeded(budget));
        }
        // A pair's minimal extension can be blocked by an end-ordering another
        // pair still has to establish; skip it and try the next violation.
        let stepped = violations
            .iter()
            .any(|&(v, u, exp, act)| repair_step(&expected, &mut rep, v, u, exp, act));
        if !stepped {
            let (v, u, _, _) = violations[0];
            return Err(ModelError::Unrepairable(v, u));
        }
    }
}

/// Whether the endpoint `w^b` may cross the next letter in the given
/// direction. Crossing is an extension of `w`'s arc over that letter, so it
/// is allowed only when the final normalized relation tolerates it: the
/// crossed letter must belong to a neighbor of `w`, and the end of a
/// contained arc may never pass its container's matching end (that ordering
/// is forced in every normalized extension, and breaking it would make two
/// repairs undo each other forever).
fn legal(expected: &[Vec<PairRelation>], rep: &Repairer, w: usize, b: u8, cwise: bool) -> bool {
    let n = rep.letters.len();
    let p = rep.pos(Letter::sup(w, b));
    let x = if cwise { rep.at(p + 1) } else { rep.at(p + n - 1) };
    if x.symbol == w {
        return false;
    }
    match expected[w][x.symbol] {
        PairRelation::Disjoint => false,
        PairRelation::Contains | PairRelation::CoverCircle | PairRelation::Overlap => true,
        PairRelation::ContainedIn => {
            let exits_end = b == 1 && cwise && x.superscript == Some(1);
            let exits_start = b == 0 && !cwise && x.superscript == Some(0);
            !(exits_end || exits_start)
        }
    }
}

/// Tries one single-letter extension toward fixing the pair `(v, u)`;
/// returns false when every useful move is currently blocked.
fn repair_step(
    expected: &[Vec<PairRelation>],
    rep: &mut Repairer,
    v: usize,
    u: usize,
    exp: PairRelation,
    actual: PairRelation,
) -> bool {
    let n = rep.letters.len();
    let pos = |rep: &Repairer, w: usize, b: u8| rep.pos(Letter::sup(w, b));
    let step = |rep: &mut Repairer, w: usize, b: u8, cwise: bool| -> bool {
        if legal(expected, rep, w, b, cwise) {
            if cwise {
                rep.step_cw(Letter::sup(w, b));
            } else {
                rep.step_ccw(Letter::sup(w, b));
            }
            true
        } else {
            false
        }
    };
    // Grow the arc of `outer` one step toward covering the arc of `inner`.
    let grow_over = |rep: &mut Repairer, outer: usize, inner: usize| -> bool {
        let o0 = pos(rep, outer, 0);
        let o1 = pos(rep, outer, 1);
        let i0 = pos(rep, inner, 0);
        let i1 = pos(rep, inner, 1);
        if !strictly_between_pos(n, o0, o1, i0) {
            step(rep, outer, 0, false) || step(rep, outer, 1, true)
        } else if !strictly_between_pos(n, o0, o1, i1) {
            step(rep, outer, 1, true) || step(rep, outer, 0, false)
        } else {
            false
        }
    };
    match exp {
        PairRelation::Contains => grow_over(rep, v, u),
        PairRelation::ContainedIn => grow_over(rep, u, v),
        PairRelation::CoverCircle => {
            let v0 = pos(rep, v, 0);
            let v1 = pos(rep, v, 1);
            let u0 = pos(rep, u, 0);
            let u1 = pos(rep, u, 1);
            if !strictly_between_pos(n, v0, v1, u0) {
                // Close the gap between v^1 and u^0.
                step(rep, v, 1, true) || step(rep, u, 0, false)
            } else if !strictly_between_pos(n, u0, u1, v0) {
                // Close the gap between u^1 and v^0.
                step(rep, u, 1, true) || step(rep, v, 0, false)
            } else {
                false
            }
        }
        PairRelation::Overlap => match actual {
            PairRelation::Disjoint => {
                let v1 = pos(rep, v, 1);
                let u0 = pos(rep, u, 0);
                let u1 = pos(rep, u, 1);
                let v0 = pos(rep, v, 0);
                let gap1 = cw_dist(n, v1, u0);
                let gap2 = cw_dist(n, u1, v0);
                let closing1 = [(v, 1u8, true), (u, 0u8, false)];
                let closing2 = [(u, 1u8, true), (v, 0u8, false)];
                let order =
                    if gap1 <= gap2 { [closing1, closing2] } else { [closing2, closing1] };
                order
                    .iter()
                    .flatten()
                    .any(|&(w, b, cwise)| step(rep, w, b, cwise))
            }
            // The contained arc must poke out of the container.
            PairRelation::Contains => step(rep, u, 1, true) || step(rep, u, 0, false),
            PairRelation::ContainedIn => step(rep, v, 1, true) || step(rep, v, 0, false),
            _ => false,
        },
        PairRelation::Disjoint => false,
    }
}

/// Reinterprets a normalized arc model as an oriented chord model of the
/// overlap graph. The circular word is preserved bit for bit.
pub fn arcs_to_chords(m: &ArcModel) -> Result<ChordModel, GraphError> {
    let gov = overlap_graph(&m.graph)?;
    Ok(ChordModel { word: m.word.clone(), graph: gov })
}

/// Inverse of [`arcs_to_chords`]: a conformal chord model of `G_ov` becomes a
/// normalized arc model of `g`.
pub fn chords_to_arcs(c: &ChordModel, g: &Graph) -> Result<ArcModel, ModelError> {
    let all: BTreeSet<usize> = (0..g.n()).collect();
    if !check_conformal(g, &c.word, &all) {
        return Err(ModelError::NotConformal);
    }
    Ok(ArcModel { word: c.word.clone(), graph: g.clone() })
}

/// Precomputed left/right-set data for fast conformality checks of many words
/// against one graph.
pub struct ConformalChecker {
    verts: Vec<usize>,
    left: Vec<crate::graphs::VertexSet>,
    right: Vec<crate::graphs::VertexSet>,
    max_symbol: usize,
}

impl ConformalChecker {
    pub fn new(g: &Graph, u_set: &BTreeSet<usize>) -> Self {
        let verts: Vec<usize> = u_set.iter().copied().collect();
        let left = verts.iter().map(|&v| left_right_sets(g, v).0).collect();
        let right = verts.iter().map(|&v| left_right_sets(g, v).1).collect();
        let max_symbol = verts.iter().copied().max().map_or(0, |m| m + 1);
        ConformalChecker { verts, left, right, max_symbol }
    }

    pub fn check(&self, w: &CircularWord) -> bool {
        let n = w.len();
        if n != 2 * self.verts.len() {
            return false;
        }
        let mut pos = vec![[usize::MAX; 2]; self.max_symbol];
        for (i, l) in w.letters().iter().enumerate() {
            match (l.symbol < self.max_symbol, l.superscript) {
                (true, Some(b)) => pos[l.symbol][b as usize] = i,
                _ => return false,
            }
        }
        for &v in &self.verts {
            if pos[v][0] == usize::MAX || pos[v][1] == usize::MAX {
                return false;
            }
        }
        for (i, &v) in self.verts.iter().enumerate() {
            let (v0, v1) = (pos[v][0], pos[v][1]);
            for &u in &self.verts {
                if u == v {
                    continue;
                }
                let in0 = strictly_between_pos(n, v0, v1, pos[u][0]);
                let in1 = strictly_between_pos(n, v0, v1, pos[u][1]);
                let ok = if self.left[i].contains(u) {
                    in0 && in1
                } else if self.right[i].contains(u) {
                    !in0 && !in1
                } else {
                    // Overlap pair: the chords must interleave.
                    in0 != in1
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}

/// True iff `w` (a circular word over `U*`) realizes every left/right-set
/// constraint of `g` restricted to `U` and crosses chords exactly for
/// overlap pairs.
pub fn check_conformal(g: &Graph, w: &CircularWord, u_set: &BTreeSet<usize>) -> bool {
    ConformalChecker::new(g, u_set).check(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::rotate_equal;

    fn word(spec: &[(usize, u8)]) -> CircularWord {
        CircularWord::new(spec.iter().map(|&(s, b)| Letter::sup(s, b)).collect())
    }

    fn p4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)])
    }

    /// P4 as intervals a=[1,4], b=[3,6], c=[5,8], d=[7,10] on a 12-unit circle:
    /// endpoint order 1:a0 3:b0 4:a1 5:c0 6:b1 7:d0 8:c1 10:d1.
    fn p4_interval_model() -> ArcModel {
        let w = word(&[(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (3, 0), (2, 1), (3, 1)]);
        ArcModel::new(w, p4()).unwrap()
    }

    #[test]
    fn interval_model_of_p4_violates_normalization() {
        let g = p4();
        let m = p4_interval_model();
        let violations = check_normalized(&g, &m);
        assert!(violations.contains(&Violation::Relation {
            v: 1,
            u: 0,
            expected: PairRelation::Contains,
            actual: PairRelation::Overlap,
        }));
    }

    #[test]
    fn normalize_p4_intervals() {
        let g = p4();
        let m = p4_interval_model();
        let norm = normalize(&g, &m).unwrap();
        assert!(check_normalized(&g, &norm).is_empty());
        assert_eq!(geometric_relation(&norm.word, 1, 0), PairRelation::Contains);
        assert_eq!(geometric_relation(&norm.word, 2, 3), PairRelation::Contains);
        assert_eq!(geometric_relation(&norm.word, 1, 2), PairRelation::CoverCircle);
    }

    #[test]
    fn normalize_is_identity_on_normalized_models() {
        let g = p4();
        let norm = normalize(&g, &p4_interval_model()).unwrap();
        let again = normalize(&g, &norm).unwrap();
        assert_eq!(norm.word, again.word);
    }

    #[test]
    fn normalize_rejects_twins_universals_and_non_models() {
        let k2 = Graph::from_edges(2, &[(0, 1)]);
        let m = ArcModel::from_word(word(&[(0, 0), (1, 0), (0, 1), (1, 1)]), 2).unwrap();
        assert!(matches!(normalize(&k2, &m), Err(ModelError::NotReduced(_))));

        // Arcs intersect but vertices non-adjacent: not a model.
        let g2 = Graph::new(2);
        let bad = ArcModel { word: word(&[(0, 0), (1, 0), (0, 1), (1, 1)]), graph: g2.clone() };
        assert!(matches!(normalize(&g2, &bad), Err(ModelError::NotAModel(0, 1))));
    }

    #[test]
    fn geometric_relation_cases() {
        // v=[v0..v1] containing u.
        let w1 = word(&[(0, 0), (1, 0), (1, 1), (0, 1)]);
        assert_eq!(geometric_relation(&w1, 0, 1), PairRelation::Contains);
        assert_eq!(geometric_relation(&w1, 1, 0), PairRelation::ContainedIn);
        let w2 = word(&[(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(geometric_relation(&w2, 0, 1), PairRelation::Disjoint);
        let w3 = word(&[(0, 0), (1, 1), (1, 0), (0, 1)]);
        assert_eq!(geometric_relation(&w3, 0, 1), PairRelation::CoverCircle);
        assert_eq!(geometric_relation(&w3, 1, 0), PairRelation::CoverCircle);
        let w4 = word(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        assert_eq!(geometric_relation(&w4, 0, 1), PairRelation::Overlap);
    }

    #[test]
    fn check_conformal_edge_pair() {
        // Adjacent pair of C4 restricted to {0,1}: an Overlap pair, so the
        // only constraint is that the chords interleave.
        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let pair: BTreeSet<usize> = [0, 1].into();
        assert!(check_conformal(&c4, &word(&[(0, 0), (1, 0), (0, 1), (1, 1)]), &pair));
        assert!(!check_conformal(&c4, &word(&[(0, 0), (0, 1), (1, 0), (1, 1)]), &pair));

        // In K2 itself the vertices are twins, so the pair classifies as
        // CoverCircle and only the mutually-inside pattern is conformal.
        let k2 = Graph::from_edges(2, &[(0, 1)]);
        let all: BTreeSet<usize> = [0, 1].into();
        assert!(check_conformal(&k2, &word(&[(0, 0), (1, 1), (1, 0), (0, 1)]), &all));
        assert!(!check_conformal(&k2, &word(&[(0, 0), (1, 0), (0, 1), (1, 1)]), &all));
        assert!(!check_conformal(&k2, &word(&[(0, 0), (0, 1), (1, 0), (1, 1)]), &all));
    }

    #[test]
    fn arcs_to_chords_round_trip() {
        let g = p4();
        let norm = normalize(&g, &p4_interval_model()).unwrap();
        let chords = arcs_to_chords(&norm).unwrap();
        assert_eq!(chords.word, norm.word);
        let all: BTreeSet<usize> = (0..4).collect();
        assert!(check_conformal(&g, &chords.word, &all));
        let back = chords_to_arcs(&chords, &g).unwrap();
        assert_eq!(back.word, norm.word);
        assert!(check_normalized(&g, &back).is_empty());

        // Reflection commutes with the conversion.
        let refl = arcs_to_chords(&norm.reflect()).unwrap();
        assert!(rotate_equal(&refl.word, &chords.word.reflect()));
    }

    #[test]
    fn chords_to_arcs_rejects_non_conformal() {
        let k2 = Graph::from_edges(2, &[(0, 1)]);
        let c = ChordModel {
            word: word(&[(0, 0), (0, 1), (1, 0), (1, 1)]),
            graph: Graph::from_edges(2, &[(0, 1)]),
        };
        assert_eq!(chords_to_arcs(&c, &k2), Err(ModelError::NotConformal));
    }

    #[test]
    fn conformal_is_hereditary() {
        let g = p4();
        let norm = normalize(&g, &p4_interval_model()).unwrap();
        let all: BTreeSet<usize> = (0..4).collect();
        assert!(check_conformal(&g, &norm.word, &all));
        // Every restriction of a conformal model is conformal.
        for mask in 1..16usize {
            let sub: BTreeSet<usize> = (0..4).filter(|v| mask >> v & 1 == 1).collect();
            let w = norm.word.restrict(&sub);
            assert!(check_conformal(&g, &w, &sub), "subset {sub:?}");
        }
    }
}
