//! Simple graphs, the five-way neighborhood pair classification, overlap
//! graphs, left/right sets, and the twin/universal representation used by
//! canonization.

use std::fmt;

use thiserror::Error;

/// A set of vertices backed by 64-bit blocks.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexSet {
    n: usize,
    bits: Vec<u64>,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet { n, bits: vec![0; n.div_ceil(64)] }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for v in 0..n {
            s.insert(v);
        }
        s
    }

    pub fn from_iter(n: usize, it: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(n);
        for v in it {
            s.insert(v);
        }
        s
    }

    pub fn capacity(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, v: usize) {
        debug_assert!(v < self.n);
        self.bits[v / 64] |= 1 << (v % 64);
    }

    pub fn remove(&mut self, v: usize) {
        self.bits[v / 64] &= !(1 << (v % 64));
    }

    pub fn contains(&self, v: usize) -> bool {
        v < self.n && self.bits[v / 64] >> (v % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & b == 0)
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect();
        VertexSet { n: self.n, bits }
    }

    pub fn intersect(&self, other: &VertexSet) -> VertexSet {
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect();
        VertexSet { n: self.n, bits }
    }

    pub fn minus(&self, other: &VertexSet) -> VertexSet {
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a & !b).collect();
        VertexSet { n: self.n, bits }
    }

    pub fn union_with(&mut self, other: &VertexSet) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(i, &block)| {
            let mut b = block;
            std::iter::from_fn(move || {
                if b == 0 {
                    None
                } else {
                    let t = b.trailing_zeros() as usize;
                    b &= b - 1;
                    Some(i * 64 + t)
                }
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.to_vec().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("classify_pair requires two distinct vertices")]
    SameVertex,
    #[error("overlap graph requires a twin-free graph, vertices {0} and {1} are twins")]
    HasTwins(usize, usize),
    #[error("overlap graph requires a universal-free graph, vertex {0} is universal")]
    HasUniversal(usize),
}

/// A simple undirected graph on vertices `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    adj: Vec<VertexSet>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph { n, adj: vec![VertexSet::empty(n); n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(u != v && u < self.n && v < self.n);
        self.adj[u].insert(v);
        self.adj[v].insert(u);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(v)
    }

    pub fn neighbors(&self, v: usize) -> &VertexSet {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in self.adj[u].iter() {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn closed_neighborhood(&self, v: usize) -> VertexSet {
        let mut s = self.adj[v].clone();
        s.insert(v);
        s
    }

    pub fn is_universal(&self, v: usize) -> bool {
        self.degree(v) == self.n - 1
    }

    pub fn are_twins(&self, u: usize, v: usize) -> bool {
        u != v && self.closed_neighborhood(u) == self.closed_neighborhood(v)
    }

    pub fn complement(&self) -> Graph {
        let mut g = Graph::new(self.n);
        for u in 0..self.n {
            for v in u + 1..self.n {
                if !self.has_edge(u, v) {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    /// Induced subgraph on `keep`; returns the graph and the old ids of its
    /// vertices in order.
    pub fn induced(&self, keep: &VertexSet) -> (Graph, Vec<usize>) {
        let old: Vec<usize> = keep.iter().collect();
        let mut g = Graph::new(old.len());
        for (i, &u) in old.iter().enumerate() {
            for (j, &v) in old.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    g.add_edge(i, j);
                }
            }
        }
        (g, old)
    }

    /// Connected components of the subgraph induced by `within`.
    pub fn components_within(&self, within: &VertexSet) -> Vec<VertexSet> {
        let mut seen = VertexSet::empty(self.n);
        let mut out = Vec::new();
        for start in within.iter() {
            if seen.contains(start) {
                continue;
            }
            let mut comp = VertexSet::empty(self.n);
            let mut stack = vec![start];
            seen.insert(start);
            comp.insert(start);
            while let Some(v) = stack.pop() {
                for u in self.adj[v].intersect(within).iter() {
                    if !seen.contains(u) {
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
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, edges={:?})", self.n, self.edges())
    }
}

/// The five possible relations between the arcs of an ordered vertex pair in
/// a normalized model, as forced by closed neighborhoods.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum PairRelation {
    /// The vertices are non-adjacent; their arcs are disjoint.
    Disjoint,
    /// The first vertex contains the second.
    Contains,
    /// The first vertex is contained in the second.
    ContainedIn,
    /// The two arcs jointly cover the circle.
    CoverCircle,
    /// The arcs overlap (cross without containment or covering).
    Overlap,
}

/// The relation the normalized model must realize for the ordered pair `(v, u)`.
pub fn classify_pair(g: &Graph, v: usize, u: usize) -> Result<PairRelation, GraphError> {
    if v == u {
        return Err(GraphError::SameVertex);
    }
    if !g.has_edge(v, u) {
        return Ok(PairRelation::Disjoint);
    }
    let nv = g.closed_neighborhood(v);
    let nu = g.closed_neighborhood(u);
    if nu != nv && nu.is_subset(&nv) {
        return Ok(PairRelation::Contains);
    }
    if nu != nv && nv.is_subset(&nu) {
        return Ok(PairRelation::ContainedIn);
    }
    let cover = nv.union(&nu).len() == g.n()
        && nv.minus(&nu).iter().all(|w| {
            let nw = g.closed_neighborhood(w);
            nw != nv && nw.is_subset(&nv)
        })
        && nu.minus(&nv).iter().all(|w| {
            let nw = g.closed_neighborhood(w);
            nw != nu && nw.is_subset(&nu)
        });
    if cover {
        return Ok(PairRelation::CoverCircle);
    }
    Ok(PairRelation::Overlap)
}

/// `L(v)` and `R(v)`: the vertices whose whole chord must lie on the left
/// (respectively right) side of `v`'s chord in a conformal model.
pub fn left_right_sets(g: &Graph, v: usize) -> (VertexSet, VertexSet) {
    let mut left = VertexSet::empty(g.n());
    let mut right = VertexSet::empty(g.n());
    for u in 0..g.n() {
        if u == v {
            continue;
        }
        match classify_pair(g, v, u).expect("distinct vertices") {
            PairRelation::Contains | PairRelation::CoverCircle => left.insert(u),
            PairRelation::Disjoint | PairRelation::ContainedIn => right.insert(u),
            PairRelation::Overlap => {}
        }
    }
    (left, right)
}

/// The overlap graph: vertices joined iff their pair relation is `Overlap`.
pub fn overlap_graph(g: &Graph) -> Result<Graph, GraphError> {
    for v in 0..g.n() {
        if g.n() > 1 && g.is_universal(v) {
            return Err(GraphError::HasUniversal(v));
        }
        for u in v + 1..g.n() {
            if g.are_twins(v, u) {
                return Err(GraphError::HasTwins(v, u));
            }
        }
    }
    let mut ov = Graph::new(g.n());
    for v in 0..g.n() {
        for u in v + 1..g.n() {
            if classify_pair(g, v, u)? == PairRelation::Overlap {
                ov.add_edge(v, u);
            }
        }
    }
    Ok(ov)
}

/// The representation `(G, m, u)` of a graph: its twin-free, universal-free
/// core plus multiplicities and the universal-vertex count.
#[derive(Clone, Debug)]
pub struct Representation {
    pub base: Graph,
    /// Multiplicity (twin-class size) per base vertex.
    pub mult: Vec<usize>,
    /// Number of universal vertices of the source graph.
    pub universals: usize,
    /// Source ids of the base vertices, in base order.
    pub kept: Vec<usize>,
}

pub fn compute_representation(g: &Graph) -> Representation {
    let n = g.n();
    let universal: Vec<usize> = (0..n).filter(|&v| n > 0 && g.degree(v) == n - 1).collect();
    let mut class_of: Vec<Option<usize>> = vec![None; n];
    let mut kept: Vec<usize> = Vec::new();
    let mut mult: Vec<usize> = Vec::new();
    for v in 0..n {
        if universal.contains(&v) || class_of[v].is_some() {
            continue;
        }
        let idx = kept.len();
        class_of[v] = Some(idx);
        kept.push(v);
        mult.push(1);
        for u in v + 1..n {
            if class_of[u].is_none() && !universal.contains(&u) && g.are_twins(v, u) {
                class_of[u] = Some(idx);
                mult[idx] += 1;
            }
        }
    }
    let mut base = Graph::new(kept.len());
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            if g.has_edge(kept[i], kept[j]) {
                base.add_edge(i, j);
            }
        }
    }
    Representation { base, mult, universals: universal.len(), kept }
}

impl Representation {
    /// Expands the representation back into a concrete graph (twin classes
    /// blown up, universal vertices appended); used to test the round-trip.
    pub fn expand(&self) -> Graph {
        let k = self.base.n();
        let total: usize = self.mult.iter().sum::<usize>() + self.universals;
        let mut ids: Vec<Vec<usize>> = Vec::new();
        let mut next = 0;
        for i in 0..k {
            ids.push((next..next + self.mult[i]).collect());
            next += self.mult[i];
        }
        let mut g = Graph::new(total);
        for i in 0..k {
            for &a in &ids[i] {
                // Twins are pairwise adjacent exactly when the class vertex is
                // self-adjacent in the closed sense, i.e. always: twins share
                // closed neighborhoods, so same-class vertices are adjacent.
                for &b in &ids[i] {
                    if a < b {
                        g.add_edge(a, b);
                    }
                }
            }
            for j in i + 1..k {
                if self.base.has_edge(i, j) {
                    for &a in &ids[i] {
                        for &b in &ids[j] {
                            g.add_edge(a, b);
                        }
                    }
                }
            }
        }
        for u in next..total {
            for v in 0..total {
                if v != u && !g.has_edge(u, v) {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }
}
