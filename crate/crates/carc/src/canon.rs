//! Canonization of circular-arc graphs.
//!
//! The canonical form is built in two level sweeps over the PQSM-tree of the
//! twin/universal-free representation. The first sweep numbers the dual
//! metachords of every node of every CA-module's decomposition tree, deepest
//! level first; the second numbers the nodes of the rooted PQS-tree. Objects
//! on the same level receive equal numbers exactly when they are locally
//! isomorphic, so the linearized table decides isomorphism.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graphs::{compute_representation, Graph};
use crate::models::{normalize, ArcModel, ModelError};
use crate::pqsm::{build_pqsm, PqsmError, PqsmTree, RootKind};
use crate::moddecomp::MdKind;
use crate::words::{least_rotation_index, CircularWord, Letter};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CanonError {
    #[error("normalization failed: {0}")]
    Normalize(#[from] ModelError),
    #[error("tree construction failed: {0}")]
    Pqsm(#[from] PqsmError),
}

/// Which sorting subroutines the level sweeps use. Both orders agree; the
/// counting-based routines exist for fidelity and are differentially tested
/// against the generic sorts.
#[derive(Clone, Copy, Debug)]
pub struct CanonOptions {
    pub use_counting_sorts: bool,
}

impl Default for CanonOptions {
    fn default() -> Self {
        CanonOptions { use_counting_sorts: true }
    }
}

/// The lexicographically least rotation of a tuple.
pub fn least_rotation(t: &[u64]) -> Vec<u64> {
    let k = least_rotation_index(t);
    let mut out = t.to_vec();
    out.rotate_left(k);
    out
}

/// Sorts the entries of every tuple ascending with one shared counting pass
/// over the value range.
pub fn sort_tuple_entries(ts: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let (mut min, mut max) = (u64::MAX, 0u64);
    for t in ts {
        for &x in t {
            min = min.min(x);
            max = max.max(x);
        }
    }
    if min > max {
        return ts.to_vec();
    }
    let d = (max - min) as usize;
    // Pointer buckets per value, with multiplicity.
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); d + 1];
    for (i, t) in ts.iter().enumerate() {
        for &x in t {
            buckets[(x - min) as usize].push(i);
        }
    }
    let mut out: Vec<Vec<u64>> = ts.iter().map(|t| Vec::with_capacity(t.len())).collect();
    for (v, bucket) in buckets.iter().enumerate() {
        for &i in bucket {
            out[i].push(v as u64 + min);
        }
    }
    out
}

/// Lexicographically sorts variable-length tuples by stable counting passes
/// from the last position to the first, inserting shorter tuples as their
/// length comes into range. Returns the input indices in sorted order.
pub fn lex_sort_tuples_radix(ts: &[Vec<u64>]) -> Vec<usize> {
    if ts.is_empty() {
        return Vec::new();
    }
    let maxlen = ts.iter().map(|t| t.len()).max().unwrap();
    let (mut min, mut max) = (u64::MAX, 0u64);
    for t in ts {
        for &x in t {
            min = min.min(x);
            max = max.max(x);
        }
    }
    let d = if min > max { 0 } else { (max - min) as usize };
    let mut by_len: Vec<Vec<usize>> = vec![Vec::new(); maxlen + 1];
    for (i, t) in ts.iter().enumerate() {
        by_len[t.len()].push(i);
    }
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); d + 1];
    let mut queue: Vec<usize> = Vec::new();
    for pos in (0..maxlen).rev() {
        // Tuples of length pos+1 enter now; the empty suffix sorts first.
        let mut next: Vec<usize> = by_len[pos + 1].clone();
        next.extend(queue.iter().copied());
        // Stable counting sort by the entry at `pos`.
        let mut used: Vec<usize> = Vec::new();
        for &i in &next {
            let v = (ts[i][pos] - min) as usize;
            if buckets[v].is_empty() {
                used.push(v);
            }
            buckets[v].push(i);
        }
        used.sort_unstable();
        queue.clear();
        for v in used {
            queue.append(&mut buckets[v]);
        }
    }
    queue.extend(by_len[0].iter().copied());
    if !by_len[0].is_empty() {
        queue.rotate_right(by_len[0].len());
    }
    queue
}

/// Sorted order plus group ids: equal tuples share a group.
pub fn lex_sort_tuples(ts: &[Vec<u64>], opts: &CanonOptions) -> (Vec<usize>, Vec<usize>) {
    let order = if opts.use_counting_sorts {
        lex_sort_tuples_radix(ts)
    } else {
        let mut idx: Vec<usize> = (0..ts.len()).collect();
        idx.sort_by(|&a, &b| ts[a].cmp(&ts[b]));
        idx
    };
    let mut group = vec![0usize; ts.len()];
    let mut gid = 0;
    for w in 0..order.len() {
        if w > 0 && ts[order[w]] != ts[order[w - 1]] {
            gid += 1;
        }
        group[order[w]] = gid;
    }
    (order, group)
}

/// A dual metachord: one node of a CA-module's decomposition tree in one of
/// its two slot orientations.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct DualMetachord {
    pub ca: usize,
    pub node: usize,
    pub flavor: u8,
}

/// Nodes of the rooted PQS-tree.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum RNode {
    Q(usize),
    P(usize),
    S(usize, u8),
    /// Synthetic root subdividing the central edge of a bicentered tree.
    R,
}

/// The PQS-tree rooted at its center (or at a synthetic node on the central
/// edge), with levels measured from the root.
#[derive(Clone, Debug)]
pub struct RootedPqs {
    pub nodes: Vec<RNode>,
    pub children: Vec<Vec<usize>>,
    pub parent: Vec<Option<usize>>,
    pub level: Vec<usize>,
    pub root: usize,
}

/// Roots the PQS-tree at its center; a bicentered tree gets the synthetic
/// node R on the edge between the two centers.
pub fn root_pqs(pqs: &crate::pqsm::PqsTree) -> RootedPqs {
    // Enumerate the unrooted nodes and adjacency.
    let mut nodes: Vec<RNode> = Vec::new();
    for q in 0..pqs.components.len() {
        nodes.push(RNode::Q(q));
    }
    for p in 0..pqs.pnodes.len() {
        nodes.push(RNode::P(p));
    }
    for ca in 0..pqs.n_cas {
        nodes.push(RNode::S(ca, 0));
        nodes.push(RNode::S(ca, 1));
    }
    let index_of = |n: RNode| nodes.iter().position(|&x| x == n).unwrap();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let connect = |a: usize, b: usize, adj: &mut Vec<Vec<usize>>| {
        adj[a].push(b);
        adj[b].push(a);
    };
    for (q, cas) in pqs.cas_of_component.iter().enumerate() {
        for &ca in cas {
            connect(index_of(RNode::Q(q)), index_of(RNode::S(ca, 0)), &mut adj);
            connect(index_of(RNode::Q(q)), index_of(RNode::S(ca, 1)), &mut adj);
        }
    }
    for (p, qs) in pqs.pnodes.iter().enumerate() {
        for &q in qs {
            connect(index_of(RNode::P(p)), index_of(RNode::Q(q)), &mut adj);
        }
    }
    // Centers by eccentricity.
    let bfs = |start: usize| -> Vec<usize> {
        let mut dist = vec![usize::MAX; nodes.len()];
        dist[start] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    };
    let ecc: Vec<usize> = (0..nodes.len())
        .map(|v| bfs(v).into_iter().max().unwrap())
        .collect();
    let min_ecc = *ecc.iter().min().unwrap();
    let centers: Vec<usize> = (0..nodes.len()).filter(|&v| ecc[v] == min_ecc).collect();

    let (root, extra_r) = match centers.len() {
        1 => (centers[0], None),
        2 => {
            debug_assert!(adj[centers[0]].contains(&centers[1]));
            nodes.push(RNode::R);
            (nodes.len() - 1, Some((centers[0], centers[1])))
        }
        _ => unreachable!("a tree has one or two centers"),
    };
    let n = nodes.len();
    let mut children = vec![Vec::new(); n];
    let mut parent = vec![None; n];
    let mut level = vec![0usize; n];
    let mut queue = std::collections::VecDeque::new();
    if let Some((c0, c1)) = extra_r {
        // Put the P-node child first for the fixed (num(P), num(Q)) shape.
        let (first, second) = match nodes[c0] {
            RNode::P(_) => (c0, c1),
            _ => (c1, c0),
        };
        children[root] = vec![first, second];
        for &c in &[first, second] {
            parent[c] = Some(root);
            level[c] = 1;
            queue.push_back(c);
        }
        // The central edge is subdivided: the two centers do not parent
        // each other.
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if Some(u) != parent[v] && parent[u].is_none() && u != root {
                    let is_other_center = (v == c0 && u == c1) || (v == c1 && u == c0);
                    if is_other_center {
                        continue;
                    }
                    parent[u] = Some(v);
                    level[u] = level[v] + 1;
                    children[v].push(u);
                    queue.push_back(u);
                }
            }
        }
    } else {
        queue.push_back(root);
        let mut seen = vec![false; n];
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    parent[u] = Some(v);
                    level[u] = level[v] + 1;
                    children[v].push(u);
                    queue.push_back(u);
                }
            }
        }
    }
    RootedPqs { nodes, children, parent, level, root }
}

/// Growable table of canon tuples; `Num` is the current length and `num(X)`
/// the index an object's tuple is stored at.
#[derive(Clone, Debug, Default)]
pub struct CanonTable {
    pub entries: Vec<Vec<u64>>,
}

impl CanonTable {
    pub fn num_counter(&self) -> u64 {
        self.entries.len() as u64
    }
}

/// Shared context of one canonization run.
pub struct Canonizer<'a> {
    pub tree: &'a PqsmTree,
    pub mult: Vec<usize>,
    pub opts: CanonOptions,
    pub table: CanonTable,
    metachord_num: BTreeMap<DualMetachord, u64>,
    node_num: BTreeMap<usize, u64>,
    rooted: RootedPqs,
}

impl<'a> Canonizer<'a> {
    pub fn new(tree: &'a PqsmTree, mult: Vec<usize>, opts: CanonOptions) -> Self {
        let rooted = root_pqs(&tree.pqs);
        Canonizer {
            tree,
            mult,
            opts,
            table: CanonTable::default(),
            metachord_num: BTreeMap::new(),
            node_num: BTreeMap::new(),
            rooted,
        }
    }

    pub fn rooted(&self) -> &RootedPqs {
        &self.rooted
    }

    /// Level of a dual metachord: the distance of its node from the root of
    /// its CA-module's decomposition tree (both flavors share it).
    pub fn levels_of_metachords(&self) -> BTreeMap<DualMetachord, usize> {
        let mut out = BTreeMap::new();
        for (ca, data) in self.tree.cas.iter().enumerate() {
            for node in 0..data.md.nodes.len() {
                let l = data.md.depth(node);
                out.insert(DualMetachord { ca, node, flavor: 0 }, l);
                out.insert(DualMetachord { ca, node, flavor: 1 }, l);
            }
        }
        out
    }

    pub fn num_of_metachord(&self, dm: DualMetachord) -> u64 {
        self.metachord_num[&dm]
    }

    pub fn num_of_node(&self, node: usize) -> u64 {
        match self.rooted.nodes[node] {
            RNode::S(ca, flavor) => {
                let root = self.tree.cas[ca].md.root;
                self.metachord_num[&DualMetachord { ca, node: root, flavor }]
            }
            _ => self.node_num[&node],
        }
    }

    /// The canon tuple of a dual metachord; children from the next level must
    /// already be numbered. `num_offset` is the table length at batch start.
    pub fn canon_metachord(&self, dm: DualMetachord, num_offset: u64) -> Vec<u64> {
        let data = &self.tree.cas[dm.ca];
        let node = &data.md.nodes[dm.node];
        if node.kind == MdKind::Leaf {
            let v = node.vertices.first().unwrap();
            let primed = if dm.flavor == 0 { &data.metachord.s0 } else { &data.metachord.s1 };
            let letter = primed.iter().find(|l| l.symbol == v).expect("leaf letter");
            let bit = (letter.superscript == Some(0)) as u64;
            return vec![bit, self.mult[v] as u64 + num_offset];
        }
        let order = data.orders[dm.node].as_ref().expect("inner node order");
        let child_num = |ci: usize| -> u64 {
            self.metachord_num
                [&DualMetachord { ca: dm.ca, node: node.children[ci], flavor: dm.flavor }]
        };
        let k = node.children.len();
        if node.kind == MdKind::Serial {
            // All orderings share delta' = delta''; the minimum interleaves
            // the child numbers ascending with their positions.
            let mut nums: Vec<u64> = (0..k).map(child_num).collect();
            nums.sort_unstable();
            let mut tuple = Vec::with_capacity(2 * k);
            for (i, &x) in nums.iter().enumerate() {
                tuple.push(x);
                tuple.push(num_offset + i as u64 + 1);
            }
            return tuple;
        }
        // Prime and parallel nodes: explicit candidates.
        let (base0, base1) = if dm.flavor == 0 {
            (order.pi0.clone(), order.pi1.clone())
        } else {
            (order.pi1.clone(), order.pi0.clone())
        };
        let mut candidates = vec![(base0.clone(), base1.clone())];
        if node.kind == MdKind::Prime {
            let r0: Vec<usize> = base1.iter().rev().copied().collect();
            let r1: Vec<usize> = base0.iter().rev().copied().collect();
            if (r0.clone(), r1.clone()) != (base0, base1) {
                candidates.push((r0, r1));
            }
        }
        let mut best: Option<Vec<u64>> = None;
        for (d0, d1) in candidates {
            let mut tuple = Vec::with_capacity(2 * k);
            for &ci in &d0 {
                tuple.push(child_num(ci));
                let pos = d1.iter().position(|&x| x == ci).unwrap() as u64 + 1;
                tuple.push(pos + num_offset);
            }
            if best.as_ref().is_none_or(|b| tuple < *b) {
                best = Some(tuple);
            }
        }
        best.unwrap()
    }

    /// First sweep: number all dual metachords, deepest level first.
    pub fn sweep_metachords(&mut self) {
        let levels = self.levels_of_metachords();
        let max = levels.values().copied().max().unwrap_or(0);
        for l in (0..=max).rev() {
            let keys: Vec<DualMetachord> =
                levels.iter().filter(|&(_, &lv)| lv == l).map(|(&k, _)| k).collect();
            let num_offset = self.table.num_counter();
            let tuples: Vec<Vec<u64>> =
                keys.iter().map(|&k| self.canon_metachord(k, num_offset)).collect();
            let assigned = self.insert_batch(&tuples);
            for (key, num) in keys.into_iter().zip(assigned) {
                self.metachord_num.insert(key, num);
            }
        }
    }

    /// Sorts a batch of tuples, stores one table entry per distinct tuple,
    /// and returns each object's assigned number.
    fn insert_batch(&mut self, tuples: &[Vec<u64>]) -> Vec<u64> {
        let base = self.table.num_counter();
        let (order, group) = lex_sort_tuples(tuples, &self.opts);
        let mut seen = u64::MAX;
        for &i in &order {
            if group[i] as u64 != seen {
                seen = group[i] as u64;
                self.table.entries.push(tuples[i].clone());
            }
        }
        group.iter().map(|&g| base + g as u64).collect()
    }

    /// The canon tuple of a Q-node: each slot becomes the pair
    /// (num of its metachord, distance to the partner slot), each child
    /// P-node its number; non-root tuples start after the parent, the root is
    /// rotated to its lexicographic minimum.
    pub fn canon_qnode(&self, rnode: usize, num_offset: u64) -> Vec<u64> {
        let q = match self.rooted.nodes[rnode] {
            RNode::Q(q) => q,
            _ => panic!("not a Q-node"),
        };
        if self.tree.pqs.root == RootKind::Serial {
            return self.canon_serial_root(num_offset);
        }
        let parent_letter: Option<Letter> = self.rooted.parent[rnode].map(|p| {
            match self.rooted.nodes[p] {
                RNode::P(pi) => self.tree.pqs.p_letter(pi),
                RNode::R => {
                    // Parent through the subdivided edge: the other center.
                    let sibling = self.rooted.children[self.rooted.parent[rnode].unwrap()]
                        .iter()
                        .copied()
                        .find(|&c| c != rnode)
                        .unwrap();
                    match self.rooted.nodes[sibling] {
                        RNode::P(pi) => self.tree.pqs.p_letter(pi),
                        _ => unreachable!("bicentered pair is one P and one Q"),
                    }
                }
                _ => unreachable!("Q-node parents are P-nodes"),
            }
        });
        let p_num = |l: Letter| -> u64 {
            let p = self.tree.pqs.p_index_of(l).expect("P letter");
            let idx = self
                .rooted
                .nodes
                .iter()
                .position(|&x| x == RNode::P(p))
                .expect("P node indexed");
            self.node_num[&idx]
        };
        let stored = self.tree.pqs.qorders[q].clone();
        let mut best: Option<Vec<u64>> = None;
        for pi in [stored.clone(), stored.reflect()] {
            let letters = pi.letters();
            let m = letters.len();
            let dist = |i: usize| -> u64 {
                let l = letters[i];
                let partner = l.flipped();
                let j = pi.position_of(partner).expect("partner slot");
                ((j + m - i - 1) % m) as u64
            };
            let expand = |idx: usize, out: &mut Vec<u64>| {
                let l = letters[idx];
                if l.superscript.is_some() {
                    let dm = DualMetachord {
                        ca: l.symbol,
                        node: self.tree.cas[l.symbol].md.root,
                        flavor: l.superscript.unwrap(),
                    };
                    out.push(self.metachord_num[&dm]);
                    out.push(dist(idx) + num_offset);
                } else {
                    out.push(p_num(l));
                }
            };
            let tuple = match parent_letter {
                Some(pl) => {
                    let start = pi.position_of(pl).expect("parent letter in order");
                    let mut out = Vec::new();
                    for k in 1..m {
                        expand((start + k) % m, &mut out);
                    }
                    out
                }
                None => {
                    let mut flat = Vec::new();
                    for k in 0..m {
                        expand(k, &mut flat);
                    }
                    least_rotation(&flat)
                }
            };
            if best.as_ref().is_none_or(|b| tuple < *b) {
                best = Some(tuple);
            }
        }
        best.unwrap()
    }

    /// The explicit serial-root tuple: per CA-module the smaller-numbered
    /// flavor first, modules sorted, every entry followed by the sentinel
    /// Num + |S| - 1.
    fn canon_serial_root(&self, num_offset: u64) -> Vec<u64> {
        let k = self.tree.cas.len();
        let sentinel = num_offset + k as u64 - 1;
        let mut pairs: Vec<(u64, u64)> = (0..k)
            .map(|ca| {
                let n0 = self.metachord_num
                    [&DualMetachord { ca, node: self.tree.cas[ca].md.root, flavor: 0 }];
                let n1 = self.metachord_num
                    [&DualMetachord { ca, node: self.tree.cas[ca].md.root, flavor: 1 }];
                (n0.min(n1), n0.max(n1))
            })
            .collect();
        pairs.sort_unstable();
        let mut tuple = Vec::with_capacity(4 * k);
        for &(p, _) in &pairs {
            tuple.push(p);
            tuple.push(sentinel);
        }
        for &(_, s) in &pairs {
            tuple.push(s);
            tuple.push(sentinel);
        }
        tuple
    }

    /// The canon tuple of a P-node: its children's numbers ascending.
    pub fn canon_pnode(&self, rnode: usize) -> Vec<u64> {
        let mut nums: Vec<u64> = self.rooted.children[rnode]
            .iter()
            .map(|&c| self.num_of_node(c))
            .collect();
        if self.opts.use_counting_sorts {
            let sorted = sort_tuple_entries(&[nums.clone()]);
            nums = sorted.into_iter().next().unwrap();
        } else {
            nums.sort_unstable();
        }
        nums
    }

    /// Second sweep: number the inner nodes of the rooted PQS-tree, deepest
    /// level first, then linearize.
    pub fn sweep_tree(&mut self) {
        let max = self.rooted.level.iter().copied().max().unwrap_or(0);
        for l in (0..=max).rev() {
            let batch: Vec<usize> = (0..self.rooted.nodes.len())
                .filter(|&i| {
                    self.rooted.level[i] == l
                        && matches!(self.rooted.nodes[i], RNode::Q(_) | RNode::P(_) | RNode::R)
                })
                .collect();
            if batch.is_empty() {
                continue;
            }
            let num_offset = self.table.num_counter();
            let tuples: Vec<Vec<u64>> = batch
                .iter()
                .map(|&i| match self.rooted.nodes[i] {
                    RNode::Q(_) => self.canon_qnode(i, num_offset),
                    RNode::P(_) => self.canon_pnode(i),
                    RNode::R => {
                        let p = self.num_of_node(self.rooted.children[i][0]);
                        let qn = self.num_of_node(self.rooted.children[i][1]);
                        vec![p, qn]
                    }
                    RNode::S(..) => unreachable!(),
                })
                .collect();
            let assigned = self.insert_batch(&tuples);
            for (node, num) in batch.into_iter().zip(assigned) {
                self.node_num.insert(node, num);
            }
        }
    }

    /// Injective linearization of (u, table): the universal count, the table
    /// length, then every entry from the top as (index, length, entries...).
    pub fn linearize(&self, universals: usize) -> Vec<u64> {
        let mut out = vec![universals as u64, self.table.num_counter()];
        for idx in (0..self.table.entries.len()).rev() {
            out.push(idx as u64);
            out.push(self.table.entries[idx].len() as u64);
            out.extend_from_slice(&self.table.entries[idx]);
        }
        out
    }
}

/// The canonical form of a circular-arc graph given with a model: equal
/// across exactly the isomorphism class.
pub fn canonize(g: &Graph, model: &ArcModel, opts: &CanonOptions) -> Result<Vec<u64>, CanonError> {
    let rep = compute_representation(g);
    if rep.base.n() == 0 {
        return Ok(vec![rep.universals as u64, 0]);
    }
    // Restrict the model to the representative vertices and relabel.
    let keep: BTreeMap<usize, usize> =
        rep.kept.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let letters: Vec<Letter> = model
        .word
        .letters()
        .iter()
        .filter(|l| keep.contains_key(&l.symbol))
        .map(|l| Letter { symbol: keep[&l.symbol], superscript: l.superscript })
        .collect();
    let base_model = ArcModel { word: CircularWord::new(letters), graph: rep.base.clone() };
    let norm = normalize(&rep.base, &base_model)?;
    let tree = build_pqsm(&rep.base, &norm)?;
    let mut canonizer = Canonizer::new(&tree, rep.mult.clone(), *opts);
    canonizer.sweep_metachords();
    canonizer.sweep_tree();
    Ok(canonizer.linearize(rep.universals))
}

/// Isomorphism of circular-arc graphs carrying models.
pub fn isomorphic(
    g: &Graph,
    gm: &ArcModel,
    h: &Graph,
    hm: &ArcModel,
) -> Result<bool, CanonError> {
    let opts = CanonOptions::default();
    Ok(canonize(g, gm, &opts)? == canonize(h, hm, &opts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::XorShift64;

    #[test]
    fn least_rotation_examples() {
        assert_eq!(least_rotation(&[2, 1, 3, 1]), vec![1, 2, 1, 3]);
        assert_eq!(least_rotation(&[7, 7, 7]), vec![7, 7, 7]);
        assert_eq!(least_rotation(&[1, 2, 3]), vec![1, 2, 3]);
    }

    #[test]
    fn least_rotation_matches_all_rotations() {
        let mut rng = XorShift64::new(9);
        for _ in 0..10_000 {
            let len = 1 + rng.below(8);
            let t: Vec<u64> = (0..len).map(|_| rng.next_u64() % 5).collect();
            let got = least_rotation(&t);
            let mut best = t.clone();
            for r in 0..len {
                let mut rot = t.clone();
                rot.rotate_left(r);
                if rot < best {
                    best = rot;
                }
            }
            assert_eq!(got, best, "input {t:?}");
        }
    }

    #[test]
    fn sort_entries_examples_and_differential() {
        let sorted = sort_tuple_entries(&[vec![3, 1], vec![2]]);
        assert_eq!(sorted, vec![vec![1, 3], vec![2]]);
        assert!(sort_tuple_entries(&[]).is_empty());

        let mut rng = XorShift64::new(11);
        for _ in 0..1000 {
            let k = rng.below(5);
            let ts: Vec<Vec<u64>> = (0..k)
                .map(|_| (0..rng.below(6)).map(|_| rng.next_u64() % 50).collect())
                .collect();
            let got = sort_tuple_entries(&ts);
            let expect: Vec<Vec<u64>> = ts
                .iter()
                .map(|t| {
                    let mut s = t.clone();
                    s.sort_unstable();
                    s
                })
                .collect();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn lex_sort_examples_and_differential() {
        let ts = vec![vec![1, 2], vec![1, 2], vec![1, 3]];
        let (order, group) = lex_sort_tuples(&ts, &CanonOptions::default());
        assert_eq!(order.len(), 3);
        assert_eq!(group[0], group[1]);
        assert_ne!(group[0], group[2]);

        let single = vec![vec![5, 5]];
        let (_, g1) = lex_sort_tuples(&single, &CanonOptions::default());
        assert_eq!(g1, vec![0]);

        let mut rng = XorShift64::new(13);
        for _ in 0..1000 {
            let k = rng.below(7);
            let ts: Vec<Vec<u64>> = (0..k)
                .map(|_| (0..rng.below(5)).map(|_| rng.next_u64() % 9).collect())
                .collect();
            let radix = lex_sort_tuples_radix(&ts);
            let mut generic: Vec<usize> = (0..ts.len()).collect();
            generic.sort_by(|&a, &b| ts[a].cmp(&ts[b]).then(a.cmp(&b)));
            let by_radix: Vec<&Vec<u64>> = radix.iter().map(|&i| &ts[i]).collect();
            let by_generic: Vec<&Vec<u64>> = generic.iter().map(|&i| &ts[i]).collect();
            assert_eq!(by_radix, by_generic, "tuples {ts:?}");
        }
    }

    #[test]
    fn leaf_metachord_tuple() {
        // Two disjoint arcs: two singleton CA-modules; the leaf tuple is
        // ([u^0 in L'], m(u) + Num) = (1, 1) at Num = 0 for flavor 0.
        let g = Graph::new(2);
        let w = CircularWord::new(vec![
            Letter::sup(0, 0),
            Letter::sup(0, 1),
            Letter::sup(1, 0),
            Letter::sup(1, 1),
        ]);
        let m = ArcModel::new(w, g.clone()).unwrap();
        let tree = build_pqsm(&g, &m).unwrap();
        let canonizer = Canonizer::new(&tree, vec![1, 1], CanonOptions::default());
        let root = tree.cas[0].md.root;
        let t0 = canonizer.canon_metachord(DualMetachord { ca: 0, node: root, flavor: 0 }, 0);
        assert_eq!(t0, vec![1, 1]);
        let t1 = canonizer.canon_metachord(DualMetachord { ca: 0, node: root, flavor: 1 }, 0);
        assert_eq!(t1, vec![0, 1]);
    }

    #[test]
    fn pnode_tuple_sorts_child_numbers() {
        // Normalized P4 gives a parallel root with P-nodes; every P tuple is
        // ascending.
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let w = CircularWord::new(vec![
            Letter::sup(0, 0),
            Letter::sup(1, 0),
            Letter::sup(0, 1),
            Letter::sup(2, 0),
            Letter::sup(1, 1),
            Letter::sup(3, 0),
            Letter::sup(2, 1),
            Letter::sup(3, 1),
        ]);
        let m = ArcModel::new(w, g.clone()).unwrap();
        let norm = crate::models::normalize(&g, &m).unwrap();
        let tree = build_pqsm(&g, &norm).unwrap();
        let mut canonizer = Canonizer::new(&tree, vec![1; 4], CanonOptions::default());
        canonizer.sweep_metachords();
        canonizer.sweep_tree();
        for (i, node) in canonizer.rooted().nodes.iter().enumerate() {
            if matches!(node, RNode::P(_)) && !canonizer.rooted().children[i].is_empty() {
                let tuple = canonizer.canon_pnode(i);
                assert!(tuple.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn empty_base_representations() {
        // K2: both vertices universal; canon = (2, 0).
        let k2 = Graph::from_edges(2, &[(0, 1)]);
        let w = CircularWord::new(vec![
            Letter::sup(0, 0),
            Letter::sup(1, 0),
            Letter::sup(0, 1),
            Letter::sup(1, 1),
        ]);
        let m = ArcModel::new(w, k2.clone()).unwrap();
        let c = canonize(&k2, &m, &CanonOptions::default()).unwrap();
        assert_eq!(c, vec![2, 0]);
    }

    #[test]
    fn triangle_plus_pendant_starts_with_one_universal() {
        // Triangle abc + pendant d on c: u = 1.
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (2, 3)]);
        // Arcs: a,b,c mutually intersecting, c also meets d.
        // a=[0..3], b=[2..5], c=[4..9](wrapping to cover a,b), d=[8..9].
        let w = CircularWord::new(vec![
            Letter::sup(2, 0),
            Letter::sup(0, 0),
            Letter::sup(1, 0),
            Letter::sup(3, 0),
            Letter::sup(2, 1),
            Letter::sup(3, 1),
            Letter::sup(0, 1),
            Letter::sup(1, 1),
        ]);
        let m = ArcModel::new(w, g.clone());
        let m = match m {
            Ok(m) => m,
            Err(_) => {
                // Build any valid model by brute force instead.
                let found = crate::oracle::gen_arc_models(4)
                    .unwrap()
                    .find(|cand| crate::oracle::brute_iso(&cand.graph, &g).unwrap())
                    .expect("triangle+pendant is a circular-arc graph");
                // Relabel the model graph onto g is unnecessary: canonize is
                // label-independent, but u is not, so map through iso content.
                found
            }
        };
        let c = canonize(&m.graph, &m, &CanonOptions::default()).unwrap();
        assert_eq!(c[0], 1, "one universal vertex");
    }

    #[test]
    fn canonize_worked_example_deterministic_and_sort_flag_agnostic() {
        let spec: &[(usize, u8)] = &[
            (0, 1),
            (1, 1),
            (2, 0),
            (3, 1),
            (4, 0),
            (5, 1),
            (7, 1),
            (8, 0),
            (2, 1),
            (1, 0),
            (4, 1),
            (3, 0),
            (0, 0),
            (6, 0),
            (8, 1),
            (7, 0),
            (6, 1),
            (5, 0),
        ];
        let w = CircularWord::new(spec.iter().map(|&(s, b)| Letter::sup(s, b)).collect());
        let m = ArcModel::from_word(w, 9).unwrap();
        let counting = canonize(&m.graph, &m, &CanonOptions { use_counting_sorts: true }).unwrap();
        let generic = canonize(&m.graph, &m, &CanonOptions { use_counting_sorts: false }).unwrap();
        assert_eq!(counting, generic);
        let again = canonize(&m.graph, &m, &CanonOptions::default()).unwrap();
        assert_eq!(counting, again);
        assert_eq!(counting[0], 0, "no universal vertices");
    }

    #[test]
    fn canonize_invariant_under_reflection_and_models() {
        // The canonical form must not depend on which normalized model of the
        // same graph the pipeline starts from.
        let spec: &[(usize, u8)] = &[
            (0, 1),
            (1, 1),
            (2, 0),
            (3, 1),
            (4, 0),
            (5, 1),
            (7, 1),
            (8, 0),
            (2, 1),
            (1, 0),
            (4, 1),
            (3, 0),
            (0, 0),
            (6, 0),
            (8, 1),
            (7, 0),
            (6, 1),
            (5, 0),
        ];
        let w = CircularWord::new(spec.iter().map(|&(s, b)| Letter::sup(s, b)).collect());
        let m = ArcModel::from_word(w, 9).unwrap();
        let tree = build_pqsm(&m.graph, &m).unwrap();
        let models = crate::enumerate::enumerate_conformal(&tree, 1 << 20).unwrap();
        let opts = CanonOptions::default();
        let base = canonize(&m.graph, &m, &opts).unwrap();
        for word in models {
            let alt = ArcModel { word, graph: m.graph.clone() };
            assert_eq!(canonize(&m.graph, &alt, &opts).unwrap(), base);
        }
    }
}
