//! Modular decomposition, module-kind classification, and the correspondence
//! between permutation models and pairs of transitive orientations.
//!
//! The decomposition is a straightforward recursive partition refinement:
//! split by connectivity of the graph and of its complement, and for prime
//! quotients find the maximal proper strong modules through module closures.
//! Polynomial, not linear — correctness at desk scale is the goal here.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graphs::{Graph, VertexSet};
use crate::words::{Letter, LinearWord, OrientedPermutationModel};

/// Kind of a strong module.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MdKind {
    Leaf,
    /// The complement restricted to the module is disconnected.
    Serial,
    /// The module itself induces a disconnected graph.
    Parallel,
    /// Both the module and its complement induce connected graphs.
    Prime,
}

#[derive(Clone, Debug)]
pub struct MdNode {
    pub kind: MdKind,
    pub vertices: VertexSet,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

/// The modular decomposition tree; vertex sets use the ambient graph's ids.
#[derive(Clone, Debug)]
pub struct MdTree {
    pub nodes: Vec<MdNode>,
    pub root: usize,
}

impl MdTree {
    pub fn node(&self, i: usize) -> &MdNode {
        &self.nodes[i]
    }

    /// All strong modules (the vertex sets of the nodes).
    pub fn strong_modules(&self) -> Vec<VertexSet> {
        self.nodes.iter().map(|n| n.vertices.clone()).collect()
    }

    /// Distance from a node to the root.
    pub fn depth(&self, mut i: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[i].parent {
            i = p;
            d += 1;
        }
        d
    }

    pub fn max_depth(&self) -> usize {
        (0..self.nodes.len()).map(|i| self.depth(i)).max().unwrap_or(0)
    }
}

/// True iff every vertex outside `x` is uniformly adjacent or non-adjacent to `x`.
pub fn is_module(g: &Graph, x: &VertexSet) -> bool {
    assert!(!x.is_empty(), "modules are non-empty");
    for w in 0..g.n() {
        if x.contains(w) {
            continue;
        }
        let hit = g.neighbors(w).intersect(x);
        if !hit.is_empty() && hit != *x {
            return false;
        }
    }
    true
}

/// Like [`is_module`] but within the induced subgraph on `ambient`.
fn is_module_within(g: &Graph, ambient: &VertexSet, x: &VertexSet) -> bool {
    for w in ambient.minus(x).iter() {
        let hit = g.neighbors(w).intersect(x);
        if !hit.is_empty() && hit != *x {
            return false;
        }
    }
    true
}

/// Smallest module of the subgraph induced by `ambient` containing `{u, v}`.
fn module_closure(g: &Graph, ambient: &VertexSet, u: usize, v: usize) -> VertexSet {
    let mut x = VertexSet::empty(g.n());
    x.insert(u);
    x.insert(v);
    loop {
        let mut grew = false;
        for w in ambient.minus(&x).iter() {
            let hit = g.neighbors(w).intersect(&x);
            if !hit.is_empty() && hit != x {
                x.insert(w);
                grew = true;
            }
        }
        if !grew {
            return x;
        }
    }
}

/// Connected components of the complement graph restricted to `within`.
fn co_components_within(g: &Graph, within: &VertexSet) -> Vec<VertexSet> {
    let mut seen = VertexSet::empty(g.n());
    let mut out = Vec::new();
    for start in within.iter() {
        if seen.contains(start) {
            continue;
        }
        let mut comp = VertexSet::empty(g.n());
        let mut stack = vec![start];
        seen.insert(start);
        comp.insert(start);
        while let Some(v) = stack.pop() {
            for u in within.minus(g.neighbors(v)).iter() {
                if u != v && !seen.contains(u) {
                    seen.insert(u);
                    comp.insert(u);
                    stack.push(u);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// The modular decomposition tree of `g`.
pub fn modular_decomposition(g: &Graph) -> MdTree {
    assert!(g.n() > 0, "decomposition of the empty graph is undefined");
    md_of_subgraph(g, &VertexSet::full(g.n()))
}

/// The modular decomposition tree of the subgraph induced by `s`, with nodes
/// carrying global vertex ids.
pub fn md_of_subgraph(g: &Graph, s: &VertexSet) -> MdTree {
    assert!(!s.is_empty());
    let mut nodes = Vec::new();
    let root = decompose(g, s, &mut nodes, None);
    MdTree { nodes, root }
}

fn decompose(
    g: &Graph,
    m: &VertexSet,
    nodes: &mut Vec<MdNode>,
    parent: Option<usize>,
) -> usize {
    let idx = nodes.len();
    nodes.push(MdNode { kind: MdKind::Leaf, vertices: m.clone(), children: Vec::new(), parent });
    if m.len() == 1 {
        return idx;
    }
    let comps = g.components_within(m);
    let (kind, parts) = if comps.len() > 1 {
        (MdKind::Parallel, comps)
    } else {
        let co = co_components_within(g, m);
        if co.len() > 1 {
            (MdKind::Serial, co)
        } else {
            // Prime: the children are the maximal proper strong modules; two
            // vertices share a child iff their module closure stays proper.
            let mut assigned = VertexSet::empty(g.n());
            let mut parts: Vec<VertexSet> = Vec::new();
            for v in m.iter() {
                if assigned.contains(v) {
                    continue;
                }
                let mut child = VertexSet::empty(g.n());
                child.insert(v);
                for w in m.iter() {
                    if w != v && !assigned.contains(w) {
                        let c = module_closure(g, m, v, w);
                        if c.len() < m.len() {
                            child.union_with(&c);
                        }
                    }
                }
                debug_assert!(is_module_within(g, m, &child));
                assigned.union_with(&child);
                parts.push(child);
            }
            (MdKind::Prime, parts)
        }
    };
    let children: Vec<usize> = parts.iter().map(|p| decompose(g, p, nodes, Some(idx))).collect();
    nodes[idx].kind = kind;
    nodes[idx].children = children;
    idx
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrientationError {
    #[error("permutation model disagrees with the graph on pair ({0},{1})")]
    ModelMismatch(usize, usize),
    #[error("the union order of the two orientations is not a linear order")]
    NotLinear,
}

/// A transitive orientation: irreflexive, one direction per edge, transitive.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct TransitiveOrientation {
    pairs: BTreeSet<(usize, usize)>,
}

impl TransitiveOrientation {
    pub fn new(pairs: BTreeSet<(usize, usize)>) -> Self {
        TransitiveOrientation { pairs }
    }

    pub fn empty() -> Self {
        TransitiveOrientation { pairs: BTreeSet::new() }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.pairs.contains(&(x, y))
    }

    pub fn insert(&mut self, x: usize, y: usize) {
        self.pairs.insert((x, y));
    }

    pub fn pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn reverse(&self) -> Self {
        TransitiveOrientation { pairs: self.pairs.iter().map(|&(x, y)| (y, x)).collect() }
    }

    /// Restriction to ordered pairs inside `s`.
    pub fn restrict(&self, s: &VertexSet) -> Self {
        TransitiveOrientation {
            pairs: self
                .pairs
                .iter()
                .filter(|&&(x, y)| s.contains(x) && s.contains(y))
                .copied()
                .collect(),
        }
    }

    pub fn is_transitive(&self) -> bool {
        for &(x, y) in &self.pairs {
            if self.pairs.contains(&(y, x)) {
                return false;
            }
            for &(y2, z) in self.pairs.range((y, 0)..(y + 1, 0)) {
                debug_assert_eq!(y2, y);
                if !self.pairs.contains(&(x, z)) {
                    return false;
                }
            }
        }
        true
    }

    /// True iff this orients exactly the edges of `edge_of` (a predicate).
    pub fn orients_exactly(&self, n: usize, edge_of: impl Fn(usize, usize) -> bool) -> bool {
        for x in 0..n {
            for y in x + 1..n {
                let count =
                    self.pairs.contains(&(x, y)) as usize + self.pairs.contains(&(y, x)) as usize;
                if edge_of(x, y) {
                    if count != 1 {
                        return false;
                    }
                } else if count != 0 {
                    return false;
                }
            }
        }
        true
    }
}

/// The pair of transitive orientations of `(V, ||)` and `(V, ~)` induced by a
/// permutation model: `x < y` / `x ≺ y` iff `x` occurs before `y` in `tau0`
/// and the pair is a non-edge / an edge.
pub fn pm_to_orientations(
    p: &OrientedPermutationModel,
    g: &Graph,
) -> Result<(TransitiveOrientation, TransitiveOrientation), OrientationError> {
    let order0: Vec<usize> = p.tau0.letters().iter().map(|l| l.symbol).collect();
    let order1: Vec<usize> = p.tau1.letters().iter().map(|l| l.symbol).collect();
    let pos0 = |v: usize| order0.iter().position(|&x| x == v).unwrap();
    let pos1 = |v: usize| order1.iter().position(|&x| x == v).unwrap();
    let mut lt = TransitiveOrientation::empty();
    let mut prec = TransitiveOrientation::empty();
    for &x in &p.vertex_set {
        for &y in &p.vertex_set {
            if x == y {
                continue;
            }
            let before0 = pos0(x) < pos0(y);
            let before1 = pos1(x) < pos1(y);
            // Crossing chords = same order in both words here? No: chords
            // between two arcs cross iff the orders disagree... with both
            // words read clockwise around the circle the model realizes
            // x ~ y iff x and y occur in the same order in tau0 and tau1.
            let crossing = before0 == before1;
            if crossing != g.has_edge(x, y) {
                return Err(OrientationError::ModelMismatch(x, y));
            }
            if before0 {
                if g.has_edge(x, y) {
                    prec.insert(x, y);
                } else {
                    lt.insert(x, y);
                }
            }
        }
    }
    Ok((lt, prec))
}

/// Rebuilds the permutation model from a pair of transitive orientations of
/// complementary edge relations; inverse of [`pm_to_orientations`]. The
/// output is canonically oriented: every `v^0` lies in `tau0`.
pub fn orientations_to_pm(
    vertices: &BTreeSet<usize>,
    lt: &TransitiveOrientation,
    prec: &TransitiveOrientation,
) -> Result<OrientedPermutationModel, OrientationError> {
    let sort_by = |before: &dyn Fn(usize, usize) -> bool| -> Result<Vec<usize>, OrientationError> {
        let mut order: Vec<usize> = vertices.iter().copied().collect();
        // Insertion sort against the pair relation, then verify the result is
        // consistent with it (catches non-linear unions).
        let k = order.len();
        for i in 1..k {
            let mut j = i;
            while j > 0 && before(order[j], order[j - 1]) {
                order.swap(j, j - 1);
                j -= 1;
            }
        }
        for i in 0..k {
            for j in i + 1..k {
                if !before(order[i], order[j]) {
                    return Err(OrientationError::NotLinear);
                }
            }
        }
        Ok(order)
    };
    let before0 = |x: usize, y: usize| prec.contains(x, y) || lt.contains(x, y);
    let before1 = |x: usize, y: usize| prec.contains(x, y) || lt.contains(y, x);
    let order0 = sort_by(&before0)?;
    let order1 = sort_by(&before1)?;
    let tau0 = LinearWord::new(order0.iter().map(|&v| Letter::sup(v, 0)).collect());
    let tau1 = LinearWord::new(order1.iter().map(|&v| Letter::sup(v, 1)).collect());
    Ok(OrientedPermutationModel::new(tau0, tau1))
}

/// Per-node quotient orientations available at an inner node of the tree.
fn quotient_orientations(g: &Graph, t: &MdTree, node: usize) -> Option<Vec<Vec<(usize, usize)>>> {
    let n = &t.nodes[node];
    let k = n.children.len();
    let reps: Vec<usize> = n.children.iter().map(|&c| t.nodes[c].vertices.first().unwrap()).collect();
    let adj = |i: usize, j: usize| g.has_edge(reps[i], reps[j]);
    match n.kind {
        MdKind::Leaf => Some(vec![Vec::new()]),
        MdKind::Parallel => Some(vec![Vec::new()]),
        MdKind::Serial => {
            // Every linear order of the children.
            let mut orders = Vec::new();
            let mut perm: Vec<usize> = (0..k).collect();
            permute(&mut perm, 0, &mut |p| {
                let mut pairs = Vec::new();
                for i in 0..k {
                    for j in i + 1..k {
                        pairs.push((p[i], p[j]));
                    }
                }
                orders.push(pairs);
                true
            });
            Some(orders)
        }
        MdKind::Prime => {
            // Find one transitive orientation by scanning vertex orders; the
            // other is its reverse. Fails iff the quotient (hence the graph)
            // is not a comparability graph.
            let mut found: Option<Vec<(usize, usize)>> = None;
            let mut perm: Vec<usize> = (0..k).collect();
            permute(&mut perm, 0, &mut |p| {
                let mut pairs = Vec::new();
                for a in 0..k {
                    for b in a + 1..k {
                        if adj(p[a], p[b]) {
                            pairs.push((p[a], p[b]));
                        }
                    }
                }
                if transitive_pairs(&pairs) {
                    found = Some(pairs);
                    false
                } else {
                    true
                }
            });
            let fwd = found?;
            let rev: Vec<(usize, usize)> = fwd.iter().map(|&(a, b)| (b, a)).collect();
            Some(vec![fwd, rev])
        }
    }
}

fn transitive_pairs(pairs: &[(usize, usize)]) -> bool {
    let set: BTreeSet<(usize, usize)> = pairs.iter().copied().collect();
    for &(x, y) in pairs {
        for &(y2, z) in pairs {
            if y2 == y && !set.contains(&(x, z)) && x != z {
                return false;
            }
        }
    }
    true
}

fn permute(perm: &mut Vec<usize>, at: usize, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
    if at == perm.len() {
        return f(perm);
    }
    for i in at..perm.len() {
        perm.swap(at, i);
        if !permute(perm, at + 1, f) {
            perm.swap(at, i);
            return false;
        }
        perm.swap(at, i);
    }
    true
}

/// All transitive orientations of `g`, assembled from independent per-node
/// choices of its modular decomposition tree `t`. Returns an empty sequence
/// when `g` is not a comparability graph.
pub fn enumerate_transitive_orientations(g: &Graph, t: &MdTree) -> Vec<TransitiveOrientation> {
    let inner: Vec<usize> =
        (0..t.nodes.len()).filter(|&i| t.nodes[i].kind != MdKind::Leaf).collect();
    let mut per_node: Vec<Vec<Vec<(usize, usize)>>> = Vec::new();
    for &i in &inner {
        match quotient_orientations(g, t, i) {
            Some(o) => per_node.push(o),
            None => return Vec::new(),
        }
    }
    let mut out = Vec::new();
    let mut choice = vec![0usize; inner.len()];
    loop {
        let mut to = TransitiveOrientation::empty();
        for (slot, &i) in inner.iter().enumerate() {
            let node = &t.nodes[i];
            for &(ci, cj) in &per_node[slot][choice[slot]] {
                let xs = &t.nodes[node.children[ci]].vertices;
                let ys = &t.nodes[node.children[cj]].vertices;
                for x in xs.iter() {
                    for y in ys.iter() {
                        to.insert(x, y);
                    }
                }
            }
        }
        out.push(to);
        // Next choice vector.
        let mut pos = 0;
        loop {
            if pos == inner.len() {
                return out;
            }
            choice[pos] += 1;
            if choice[pos] < per_node[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)])
    }

    #[test]
    fn is_module_examples() {
        let g = p4();
        let single = VertexSet::from_iter(4, [1]);
        assert!(is_module(&g, &single));
        assert!(is_module(&g, &VertexSet::full(4)));
        let ac = VertexSet::from_iter(4, [0, 2]);
        assert!(!is_module(&g, &ac));
    }

    #[test]
    fn md_of_p4_is_prime() {
        let t = modular_decomposition(&p4());
        assert_eq!(t.nodes[t.root].kind, MdKind::Prime);
        assert_eq!(t.nodes[t.root].children.len(), 4);
        assert!(t.nodes[t.root].children.iter().all(|&c| t.nodes[c].kind == MdKind::Leaf));
    }

    #[test]
    fn md_of_edgeless_is_parallel() {
        let t = modular_decomposition(&Graph::new(5));
        assert_eq!(t.nodes[t.root].kind, MdKind::Parallel);
        assert_eq!(t.nodes[t.root].children.len(), 5);
    }

    #[test]
    fn md_of_complete_is_serial() {
        let mut g = Graph::new(4);
        for u in 0..4 {
            for v in u + 1..4 {
                g.add_edge(u, v);
            }
        }
        let t = modular_decomposition(&g);
        assert_eq!(t.nodes[t.root].kind, MdKind::Serial);
        assert_eq!(t.nodes[t.root].children.len(), 4);
    }

    /// A graph shaped like the admissible-model example: prime root with four
    /// children, one of which is serial with three children.
    #[test]
    fn md_with_nested_serial_child() {
        // Vertices 0..3 form a P4 skeleton; vertex 1 is blown up into a
        // serial module {1,4,5} (pairwise adjacent, same outside neighbors).
        let g = Graph::from_edges(
            6,
            &[(0, 1), (1, 2), (2, 3), (0, 4), (4, 2), (0, 5), (5, 2), (1, 4), (1, 5), (4, 5)],
        );
        let t = modular_decomposition(&g);
        assert_eq!(t.nodes[t.root].kind, MdKind::Prime);
        assert_eq!(t.nodes[t.root].children.len(), 4);
        let serial = t.nodes[t.root]
            .children
            .iter()
            .find(|&&c| t.nodes[c].kind == MdKind::Serial)
            .copied()
            .expect("one serial child");
        assert_eq!(t.nodes[serial].vertices.to_vec(), vec![1, 4, 5]);
        assert_eq!(t.nodes[serial].children.len(), 3);
    }

    #[test]
    fn pm_to_orientations_examples() {
        // p = (ab, ab) with a ~ b: prec = {a<b}, lt empty.
        let k2 = Graph::from_edges(2, &[(0, 1)]);
        let p = OrientedPermutationModel::new(
            LinearWord::new(vec![Letter::sup(0, 0), Letter::sup(1, 0)]),
            LinearWord::new(vec![Letter::sup(0, 1), Letter::sup(1, 1)]),
        );
        let (lt, prec) = pm_to_orientations(&p, &k2).unwrap();
        assert!(lt.is_empty());
        assert!(prec.contains(0, 1) && prec.len() == 1);

        // p = (ab, ba) with a || b: lt = {a<b}, prec empty.
        let e2 = Graph::new(2);
        let p = OrientedPermutationModel::new(
            LinearWord::new(vec![Letter::sup(0, 0), Letter::sup(1, 0)]),
            LinearWord::new(vec![Letter::sup(1, 1), Letter::sup(0, 1)]),
        );
        let (lt, prec) = pm_to_orientations(&p, &e2).unwrap();
        assert!(prec.is_empty());
        assert!(lt.contains(0, 1) && lt.len() == 1);

        // Inconsistent model: same order but non-adjacent.
        let p = OrientedPermutationModel::new(
            LinearWord::new(vec![Letter::sup(0, 0), Letter::sup(1, 0)]),
            LinearWord::new(vec![Letter::sup(0, 1), Letter::sup(1, 1)]),
        );
        assert!(pm_to_orientations(&p, &e2).is_err());
    }

    #[test]
    fn orientations_to_pm_examples() {
        // Empty graph on {a,b,c}, a<b<c: tau0 = abc, tau1 = cba.
        let verts: BTreeSet<usize> = [0, 1, 2].into();
        let lt = TransitiveOrientation::new([(0, 1), (0, 2), (1, 2)].into());
        let p = orientations_to_pm(&verts, &lt, &TransitiveOrientation::empty()).unwrap();
        let syms0: Vec<usize> = p.tau0.letters().iter().map(|l| l.symbol).collect();
        let syms1: Vec<usize> = p.tau1.letters().iter().map(|l| l.symbol).collect();
        assert_eq!(syms0, vec![0, 1, 2]);
        assert_eq!(syms1, vec![2, 1, 0]);

        // Complete graph, prec total: tau0 = tau1 = the prec order.
        let prec = TransitiveOrientation::new([(2, 0), (2, 1), (0, 1)].into());
        let p = orientations_to_pm(&verts, &TransitiveOrientation::empty(), &prec).unwrap();
        let syms0: Vec<usize> = p.tau0.letters().iter().map(|l| l.symbol).collect();
        let syms1: Vec<usize> = p.tau1.letters().iter().map(|l| l.symbol).collect();
        assert_eq!(syms0, vec![2, 0, 1]);
        assert_eq!(syms1, vec![2, 0, 1]);

        // Non-linear union errors out.
        let bad = TransitiveOrientation::new([(0, 1)].into());
        assert_eq!(
            orientations_to_pm(&verts, &bad, &TransitiveOrientation::empty()).unwrap_err(),
            OrientationError::NotLinear
        );
    }

    #[test]
    fn to_counts_per_node_kind() {
        // Serial root with 3 children: 3! orientations.
        let mut k3 = Graph::new(3);
        k3.add_edge(0, 1);
        k3.add_edge(0, 2);
        k3.add_edge(1, 2);
        let t = modular_decomposition(&k3);
        assert_eq!(enumerate_transitive_orientations(&k3, &t).len(), 6);

        // Prime (P4): exactly 2, mutually reverse.
        let g = p4();
        let t = modular_decomposition(&g);
        let tos = enumerate_transitive_orientations(&g, &t);
        assert_eq!(tos.len(), 2);
        assert_eq!(tos[0], tos[1].reverse());
        assert!(tos.iter().all(|o| o.is_transitive()));
        assert!(tos.iter().all(|o| o.orients_exactly(4, |x, y| g.has_edge(x, y))));

        // Parallel root: exactly 1 (empty).
        let e3 = Graph::new(3);
        let t = modular_decomposition(&e3);
        let tos = enumerate_transitive_orientations(&e3, &t);
        assert_eq!(tos.len(), 1);
        assert!(tos[0].is_empty());

        // Odd cycle: not a comparability graph.
        let c5 = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let t = modular_decomposition(&c5);
        assert!(enumerate_transitive_orientations(&c5, &t).is_empty());
    }

    #[test]
    fn round_trip_orientation_pairs() {
        // For every pair of TOs of a graph and its complement (n <= 4),
        // orientations -> model -> orientations is the identity.
        let cases: Vec<(usize, Vec<(usize, usize)>)> = vec![
            (3, vec![(0, 1)]),
            (4, vec![(0, 1), (1, 2), (2, 3)]),
            (4, vec![(0, 1), (2, 3)]),
            (4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]),
        ];
        for (n, edges) in &cases {
            let g = Graph::from_edges(*n, edges);
            let co = g.complement();
            let tg = modular_decomposition(&g);
            let tco = modular_decomposition(&co);
            let precs = enumerate_transitive_orientations(&g, &tg);
            let lts = enumerate_transitive_orientations(&co, &tco);
            let verts: BTreeSet<usize> = (0..*n).collect();
            for lt in &lts {
                for prec in &precs {
                    let p = orientations_to_pm(&verts, lt, prec).unwrap();
                    let (lt2, prec2) = pm_to_orientations(&p, &g).unwrap();
                    assert_eq!(&lt2, lt);
                    assert_eq!(&prec2, prec);
                    let p2 = orientations_to_pm(&verts, &lt2, &prec2).unwrap();
                    assert_eq!(p2, p);
                }
            }
        }
    }
}
