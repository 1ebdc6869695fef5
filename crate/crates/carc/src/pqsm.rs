//! CA-modules, slots, metachords, the PQS-tree, and the PQSM-tree.
//!
//! A CA-module is an inclusion-maximal module of the overlap graph that lives
//! inside one child of the modular-decomposition root and induces a consistent
//! permutation model in every conformal model. Its two contiguous blocks are
//! the slots; together with the fixed transitive orientation of its
//! non-adjacent pairs they form the metachord. The PQS-tree organizes the
//! slots around Q-nodes (components of the overlap graph) and P-nodes
//! (maximal sets of pairwise neighboring components); attaching each
//! CA-module's modular decomposition tree at its slot yields the PQSM-tree,
//! whose ordered versions correspond one-to-one to the conformal models.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::graphs::{left_right_sets, Graph, VertexSet};
use crate::models::{arcs_to_chords, ArcModel, ChordModel};
use crate::moddecomp::{
    md_of_subgraph, modular_decomposition, pm_to_orientations, MdKind, MdTree,
    TransitiveOrientation,
};
use crate::words::{
    two_block_split, CircularWord, Letter, LinearWord, OrientedPermutationModel, Symbol,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PqsmError {
    #[error("overlap graph construction failed: {0}")]
    Overlap(#[from] crate::graphs::GraphError),
    #[error("vertex set does not induce a consistent permutation model")]
    NotContiguous,
    #[error("expected block is not contiguous in the model")]
    BlockNotContiguous,
    #[error("operation requires a parallel root")]
    NotParallel,
    #[error("model is inconsistent with the tree: {0}")]
    Inconsistent(String),
}

/// The metachord of a CA-module: its two slots and the fixed transitive
/// orientation of its non-adjacent pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Metachord {
    pub s0: BTreeSet<Letter>,
    pub s1: BTreeSet<Letter>,
    pub lt: TransitiveOrientation,
}

/// Stored ordering of an inner node of a CA-module's decomposition tree: the
/// children in the order their blocks appear in the two slot words of the
/// base conformal model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeOrder {
    pub pi0: Vec<usize>,
    pub pi1: Vec<usize>,
}

/// A CA-module with everything attached to it in the PQSM-tree.
#[derive(Clone, Debug)]
pub struct CaModuleData {
    pub vertices: VertexSet,
    pub representant: usize,
    /// Index of the overlap-graph component (Q-node) containing the module.
    pub component: usize,
    pub metachord: Metachord,
    /// Modular decomposition of (S, ~), vertex ids global.
    pub md: MdTree,
    /// Stored ordering per md node (None for leaves).
    pub orders: Vec<Option<NodeOrder>>,
}

/// Kind of the modular-decomposition root of the overlap graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootKind {
    Serial,
    Prime,
    Parallel,
}

/// The PQS-tree: S-nodes (slots, encoded as superscripted letters over the
/// CA-module index), Q-nodes (components), and P-nodes.
#[derive(Clone, Debug)]
pub struct PqsTree {
    pub n_cas: usize,
    /// Symbol base for P-node letters.
    pub p_offset: usize,
    pub components: Vec<VertexSet>,
    pub cas_of_component: Vec<Vec<usize>>,
    /// P-node -> sorted component indices it joins.
    pub pnodes: Vec<Vec<usize>>,
    pub root: RootKind,
    /// Per Q-node: the stored circular order of its tree neighbors (slot
    /// letters of its CA-modules interleaved with P-node letters).
    pub qorders: Vec<CircularWord>,
}

impl PqsTree {
    pub fn slot_letter(&self, ca: usize, flavor: u8) -> Letter {
        Letter::sup(ca, flavor)
    }

    pub fn p_letter(&self, p: usize) -> Letter {
        Letter::plain(self.p_offset + p)
    }

    pub fn p_index_of(&self, l: Letter) -> Option<usize> {
        if l.superscript.is_none() && l.symbol >= self.p_offset {
            Some(l.symbol - self.p_offset)
        } else {
            None
        }
    }

    /// P-node indices adjacent to a component.
    pub fn pnodes_of(&self, q: usize) -> Vec<usize> {
        (0..self.pnodes.len()).filter(|&p| self.pnodes[p].contains(&q)).collect()
    }

    /// Component indices on the `p` side after removing the edge (q, p).
    pub fn side_components(&self, q: usize, p: usize) -> Vec<usize> {
        // BFS in the bipartite Q-P tree from p, never stepping back into q.
        let mut seen_q: BTreeSet<usize> = [q].into();
        let mut seen_p: BTreeSet<usize> = [p].into();
        let mut frontier_p = vec![p];
        let mut out = Vec::new();
        while let Some(cur_p) = frontier_p.pop() {
            for &q2 in &self.pnodes[cur_p] {
                if seen_q.insert(q2) {
                    out.push(q2);
                    for p2 in self.pnodes_of(q2) {
                        if seen_p.insert(p2) {
                            frontier_p.push(p2);
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// True iff the component is a permutation component (its stored order is
    /// its own reflection, equivalently its only CA-module is itself).
    pub fn is_permutation_component(&self, q: usize) -> bool {
        self.qorders[q] == self.qorders[q].reflect()
    }
}

/// The PQSM-tree: the PQS-tree plus the per-CA-module decomposition trees
/// with their stored orderings, and the base conformal model everything was
/// read from.
#[derive(Clone, Debug)]
pub struct PqsmTree {
    pub graph: Graph,
    pub gov: Graph,
    pub phi: ChordModel,
    pub cas: Vec<CaModuleData>,
    pub pqs: PqsTree,
}

/// State of one strong module during the bottom-up CA-module sweep.
enum SweepState {
    /// The module induced a consistent permutation model and was replaced by a
    /// fresh two-letter symbol in the working word.
    Collapsed(Symbol),
    /// The module stayed expanded; its CA-modules are finished.
    Expanded,
}

/// The CA-module partition of the overlap graph, computed bottom-up over its
/// modular decomposition tree using the working-word collapse rule.
pub fn compute_ca_modules(gov: &Graph, md: &MdTree, phi: &ChordModel) -> Vec<VertexSet> {
    if gov.n() == 1 {
        return vec![VertexSet::full(1)];
    }
    let mut word = phi.word.clone();
    let mut state: Vec<Option<SweepState>> = (0..md.nodes.len()).map(|_| None).collect();
    // Symbols currently standing for each node's vertices in the working word.
    let mut symbols: Vec<BTreeSet<Symbol>> = vec![BTreeSet::new(); md.nodes.len()];
    let mut ca_sets: Vec<Vec<VertexSet>> = vec![Vec::new(); md.nodes.len()];
    let fresh_base = gov.n();

    let order = postorder(md);
    for &node in &order {
        if node == md.root {
            continue;
        }
        let m = &md.nodes[node];
        let mut footprint: BTreeSet<Symbol> = BTreeSet::new();
        if m.kind == MdKind::Leaf {
            footprint.insert(m.vertices.first().unwrap());
        } else {
            for &c in &m.children {
                footprint.extend(symbols[c].iter().copied());
            }
        }
        let sel = |l: Letter| footprint.contains(&l.symbol);
        if let Some((b1, b2)) = two_block_split(&word, &sel) {
            let sym = fresh_base + node;
            word = collapse_blocks(&word, &b1, &b2, sym);
            symbols[node] = [sym].into();
            state[node] = Some(SweepState::Collapsed(sym));
            continue;
        }
        symbols[node] = footprint;
        state[node] = Some(SweepState::Expanded);
        // Pass up the CA-modules of expanded children; group collapsed
        // children per the node kind.
        let mut collapsed_children: Vec<usize> = Vec::new();
        for &c in &m.children {
            match state[c] {
                Some(SweepState::Collapsed(_)) => collapsed_children.push(c),
                _ => {
                    let sets = std::mem::take(&mut ca_sets[c]);
                    ca_sets[node].extend(sets);
                }
            }
        }
        match m.kind {
            MdKind::Prime => {
                for &c in &collapsed_children {
                    ca_sets[node].push(md.nodes[c].vertices.clone());
                }
            }
            MdKind::Serial | MdKind::Parallel => {
                // Maximal unions of collapsed children whose letters split
                // into two blocks of the working word.
                let k = collapsed_children.len();
                let mut valid: Vec<u64> = Vec::new();
                for mask in 1u64..(1 << k) {
                    let syms: BTreeSet<Symbol> = (0..k)
                        .filter(|&i| mask >> i & 1 == 1)
                        .map(|i| match state[collapsed_children[i]] {
                            Some(SweepState::Collapsed(s)) => s,
                            _ => unreachable!(),
                        })
                        .collect();
                    let sel = |l: Letter| syms.contains(&l.symbol);
                    if two_block_split(&word, &sel).is_some() {
                        valid.push(mask);
                    }
                }
                for &mask in &valid {
                    if valid.iter().any(|&m2| m2 != mask && m2 & mask == mask) {
                        continue;
                    }
                    let mut set = VertexSet::empty(gov.n());
                    for i in 0..k {
                        if mask >> i & 1 == 1 {
                            set.union_with(&md.nodes[collapsed_children[i]].vertices);
                        }
                    }
                    ca_sets[node].push(set);
                }
            }
            MdKind::Leaf => unreachable!("leaves have no collapsed children"),
        }
    }

    let mut out: Vec<VertexSet> = Vec::new();
    for &c in &md.nodes[md.root].children {
        match state[c] {
            Some(SweepState::Collapsed(_)) => out.push(md.nodes[c].vertices.clone()),
            _ => out.extend(std::mem::take(&mut ca_sets[c])),
        }
    }
    out.sort_by_key(|s| s.first());
    out
}

fn postorder(md: &MdTree) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![(md.root, false)];
    while let Some((node, visited)) = stack.pop() {
        if visited {
            out.push(node);
        } else {
            stack.push((node, true));
            for &c in &md.nodes[node].children {
                stack.push((c, false));
            }
        }
    }
    out
}

/// Replaces the two contiguous blocks by the letters `sym^0` and `sym^1`.
fn collapse_blocks(
    word: &CircularWord,
    b1: &[Letter],
    b2: &[Letter],
    sym: Symbol,
) -> CircularWord {
    let set1: BTreeSet<Letter> = b1.iter().copied().collect();
    let set2: BTreeSet<Letter> = b2.iter().copied().collect();
    let mut letters = Vec::new();
    let (mut seen1, mut seen2) = (false, false);
    for &l in word.letters() {
        if set1.contains(&l) {
            if !seen1 {
                letters.push(Letter::sup(sym, 0));
                seen1 = true;
            }
        } else if set2.contains(&l) {
            if !seen2 {
                letters.push(Letter::sup(sym, 1));
                seen2 = true;
            }
        } else {
            letters.push(l);
        }
    }
    CircularWord::new(letters)
}

/// Rule-(R) reference: enumerate all modules inside root children that induce
/// a consistent permutation model in `phi`; keep the inclusion-maximal ones.
pub fn ca_modules_definitional(gov: &Graph, phi: &ChordModel) -> Vec<VertexSet> {
    if gov.n() == 1 {
        return vec![VertexSet::full(1)];
    }
    let md = modular_decomposition(gov);
    let mut out = Vec::new();
    for &child in &md.nodes[md.root].children {
        let verts: Vec<usize> = md.nodes[child].vertices.to_vec();
        let k = verts.len();
        let mut valid: Vec<VertexSet> = Vec::new();
        for mask in 1u64..(1 << k) {
            let s = VertexSet::from_iter(
                gov.n(),
                (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| verts[i]),
            );
            if !crate::moddecomp::is_module(gov, &s) {
                continue;
            }
            let sel = |l: Letter| s.contains(l.symbol);
            if two_block_split(&phi.word, &sel).is_some() {
                valid.push(s);
            }
        }
        for s in &valid {
            if valid.iter().any(|t| t != s && s.is_subset(t)) {
                continue;
            }
            out.push(s.clone());
        }
    }
    out.sort_by_key(|s| s.first());
    out
}

/// The metachord of a CA-module read from a conformal model: slot `S^0` is
/// the block carrying the representant's 0-letter, and the orientation is the
/// induced order of the non-adjacent pairs.
pub fn metachord_of(phi: &ChordModel, s: &VertexSet) -> Result<Metachord, PqsmError> {
    let (tau0, tau1) = slot_words_of(phi, s)?;
    let opm = OrientedPermutationModel::new(tau0.clone(), tau1.clone());
    let (lt, _prec) =
        pm_to_orientations(&opm, &phi.graph).map_err(|e| PqsmError::Inconsistent(e.to_string()))?;
    Ok(Metachord {
        s0: tau0.letters().iter().copied().collect(),
        s1: tau1.letters().iter().copied().collect(),
        lt,
    })
}

/// The two slot words of `s` in `phi`, with the first one holding the
/// representant's (minimum vertex) 0-letter.
pub fn slot_words_of(phi: &ChordModel, s: &VertexSet) -> Result<(LinearWord, LinearWord), PqsmError> {
    let sel = |l: Letter| s.contains(l.symbol);
    let (b1, b2) = two_block_split(&phi.word, &sel).ok_or(PqsmError::NotContiguous)?;
    let rep = s.first().expect("non-empty CA-module");
    let r0 = Letter::sup(rep, 0);
    let (first, second) = if b1.contains(&r0) { (b1, b2) } else { (b2, b1) };
    Ok((LinearWord::new(first), LinearWord::new(second)))
}

/// Definitional P-node computation: inclusion-maximal sets of two or more
/// pairwise neighboring (non-separated) components. Quadratic in subsets;
/// test oracle for the gap-chain recovery used by [`build_pqs_tree`].
pub fn pnodes_definitional(g: &Graph, components: &[VertexSet]) -> Vec<Vec<usize>> {
    let k = components.len();
    let neighboring = |a: usize, b: usize| !separated(g, &components[a], &components[b]);
    let mut valid: Vec<u64> = Vec::new();
    for mask in 1u64..(1 << k) {
        if (mask.count_ones() as usize) < 2 {
            continue;
        }
        let members: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        let ok = members
            .iter()
            .enumerate()
            .all(|(i, &a)| members[i + 1..].iter().all(|&b| neighboring(a, b)));
        if ok {
            valid.push(mask);
        }
    }
    let mut out: Vec<Vec<usize>> = valid
        .iter()
        .filter(|&&m| !valid.iter().any(|&m2| m2 != m && m2 & m == m))
        .map(|&m| (0..k).filter(|&i| m >> i & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

/// True iff some vertex outside both components has them on opposite sides.
pub fn separated(g: &Graph, q1: &VertexSet, q2: &VertexSet) -> bool {
    let both = q1.union(q2);
    for v in 0..g.n() {
        if both.contains(v) {
            continue;
        }
        let (left, right) = left_right_sets(g, v);
        if (q1.is_subset(&left) && q2.is_subset(&right))
            || (q2.is_subset(&left) && q1.is_subset(&right))
        {
            return true;
        }
    }
    false
}

/// Collapses each CA-module's slot blocks in `phi` to slot letters, giving
/// the circular order of the slots.
pub fn slot_order_of(phi: &ChordModel, cas: &[CaModuleData]) -> CircularWord {
    let mut slot_of: BTreeMap<Letter, Letter> = BTreeMap::new();
    for (i, ca) in cas.iter().enumerate() {
        for &l in &ca.metachord.s0 {
            slot_of.insert(l, Letter::sup(i, 0));
        }
        for &l in &ca.metachord.s1 {
            slot_of.insert(l, Letter::sup(i, 1));
        }
    }
    let letters = phi.word.letters();
    let n = letters.len();
    // Start at a block boundary so a wrapped block is not emitted twice.
    let start = (0..n)
        .find(|&i| slot_of[&letters[i]] != slot_of[&letters[(i + n - 1) % n]])
        .unwrap_or(0);
    let mut out = Vec::new();
    let mut prev: Option<Letter> = None;
    for k in 0..n {
        let slot = slot_of[&letters[(start + k) % n]];
        if prev != Some(slot) {
            out.push(slot);
            prev = Some(slot);
        }
    }
    CircularWord::new(out)
}

/// Builds the PQS-tree from a conformal model: Q-nodes are the components of
/// the overlap graph; for a parallel root, P-nodes are recovered from the
/// gaps each component's word leaves in the model.
pub fn build_pqs_tree(
    g: &Graph,
    gov: &Graph,
    md: &MdTree,
    phi: &ChordModel,
    cas: &[CaModuleData],
) -> Result<PqsTree, PqsmError> {
    let n_cas = cas.len();
    let p_offset = g.n() + n_cas;
    let components = gov.components_within(&VertexSet::full(gov.n()));
    let mut cas_of_component = vec![Vec::new(); components.len()];
    for (i, ca) in cas.iter().enumerate() {
        cas_of_component[ca.component].push(i);
    }
    let root = match md.nodes[md.root].kind {
        MdKind::Serial => RootKind::Serial,
        MdKind::Parallel => RootKind::Parallel,
        _ => RootKind::Prime,
    };
    let pi = slot_order_of(phi, cas);

    if root != RootKind::Parallel {
        return Ok(PqsTree {
            n_cas,
            p_offset,
            components,
            cas_of_component,
            pnodes: Vec::new(),
            root,
            qorders: vec![pi],
        });
    }

    // P-node recovery. A gap of component Q is a pair (prev, next) of letters
    // consecutive in phi||Q* but not in phi; following "the letter after prev
    // in phi starts the next component's block" chains gaps into cycles, one
    // per P-node.
    let letters = phi.word.letters();
    let n = letters.len();
    let mut gaps: Vec<(usize, Letter, Letter)> = Vec::new(); // (component, prev, next)
    for (qi, comp) in components.iter().enumerate() {
        let restricted = phi.word.restrict_letters(|l| comp.contains(l.symbol));
        let rl = restricted.letters();
        for i in 0..rl.len() {
            let prev = rl[i];
            let next = rl[(i + 1) % rl.len()];
            let p = letters.iter().position(|&x| x == prev).unwrap();
            if letters[(p + 1) % n] != next {
                gaps.push((qi, prev, next));
            }
        }
    }
    // successor gap of (q, prev, next): the gap whose `next` letter directly
    // follows `prev` in phi.
    let mut succ: Vec<usize> = Vec::with_capacity(gaps.len());
    for &(_, prev, _) in &gaps {
        let p = letters.iter().position(|&x| x == prev).unwrap();
        let after = letters[(p + 1) % n];
        let target = gaps
            .iter()
            .position(|&(qj, _, nj)| nj == after && components[qj].contains(after.symbol))
            .ok_or_else(|| PqsmError::Inconsistent("gap chain broken".into()))?;
        succ.push(target);
    }
    let mut seen = vec![false; gaps.len()];
    let mut pnodes: Vec<Vec<usize>> = Vec::new();
    for start in 0..gaps.len() {
        if seen[start] {
            continue;
        }
        let mut members = Vec::new();
        let mut cur = start;
        loop {
            if seen[cur] {
                break;
            }
            seen[cur] = true;
            members.push(gaps[cur].0);
            cur = succ[cur];
        }
        members.sort();
        members.dedup();
        pnodes.push(members);
    }
    pnodes.sort();

    let mut tree = PqsTree {
        n_cas,
        p_offset,
        components,
        cas_of_component,
        pnodes,
        root,
        qorders: Vec::new(),
    };

    // Stored Q-node orders: in pi, replace each adjacent P-side slot run by
    // the P letter.
    let mut qorders = Vec::new();
    for q in 0..tree.components.len() {
        let mut replace: BTreeMap<Letter, Letter> = BTreeMap::new();
        for p in tree.pnodes_of(q) {
            for side_q in tree.side_components(q, p) {
                for &ca in &tree.cas_of_component[side_q] {
                    replace.insert(Letter::sup(ca, 0), tree.p_letter(p));
                    replace.insert(Letter::sup(ca, 1), tree.p_letter(p));
                }
            }
        }
        let mapped: Vec<Letter> =
            pi.letters().iter().map(|l| *replace.get(l).unwrap_or(l)).collect();
        let mut out = Vec::new();
        let m = mapped.len();
        let start = (0..m)
            .find(|&i| mapped[i] != mapped[(i + m - 1) % m])
            .ok_or_else(|| PqsmError::Inconsistent("degenerate slot order".into()))?;
        let mut prev = None;
        for k in 0..m {
            let l = mapped[(start + k) % m];
            if prev != Some(l) {
                out.push(l);
                prev = Some(l);
            }
        }
        // Each adjacent P must appear exactly once (property T3).
        for p in tree.pnodes_of(q) {
            if out.iter().filter(|&&l| l == tree.p_letter(p)).count() != 1 {
                return Err(PqsmError::BlockNotContiguous);
            }
        }
        qorders.push(CircularWord::new(out));
    }
    tree.qorders = qorders;
    Ok(tree)
}

/// The extended conformal model of a component: each P-side block of the
/// model is replaced by the P-node's letter.
pub fn extended_model(
    phi: &ChordModel,
    pqs: &PqsTree,
    q: usize,
) -> Result<CircularWord, PqsmError> {
    if pqs.root != RootKind::Parallel {
        return Err(PqsmError::NotParallel);
    }
    let mut replace: BTreeMap<Letter, Letter> = BTreeMap::new();
    for p in pqs.pnodes_of(q) {
        for side_q in pqs.side_components(q, p) {
            for v in pqs.components[side_q].iter() {
                replace.insert(Letter::sup(v, 0), pqs.p_letter(p));
                replace.insert(Letter::sup(v, 1), pqs.p_letter(p));
            }
        }
    }
    let mapped: Vec<Letter> =
        phi.word.letters().iter().map(|l| *replace.get(l).unwrap_or(l)).collect();
    let m = mapped.len();
    let start = (0..m)
        .find(|&i| mapped[i] != mapped[(i + m - 1) % m])
        .ok_or(PqsmError::BlockNotContiguous)?;
    let mut out = Vec::new();
    let mut prev = None;
    for k in 0..m {
        let l = mapped[(start + k) % m];
        if prev != Some(l) {
            out.push(l);
            prev = Some(l);
        }
    }
    // Every P letter must occur exactly once: its side block is contiguous.
    for p in pqs.pnodes_of(q) {
        if out.iter().filter(|&&l| l == pqs.p_letter(p)).count() != 1 {
            return Err(PqsmError::BlockNotContiguous);
        }
    }
    Ok(CircularWord::new(out))
}

/// The K-relation classes of a prime module `q` of the overlap graph, by the
/// three-case definition over its children.
pub fn k_relation_prime(g: &Graph, gov: &Graph, q: &VertexSet) -> Vec<VertexSet> {
    let md = md_of_subgraph(gov, q);
    assert_eq!(md.nodes[md.root].kind, MdKind::Prime, "K-relation needs a prime module");
    let mut out = Vec::new();
    for &child in &md.nodes[md.root].children {
        let m = &md.nodes[child].vertices;
        match md.nodes[child].kind {
            MdKind::Leaf | MdKind::Prime => out.push(m.clone()),
            MdKind::Parallel => {
                // Same side with respect to every outside vertex parallel to M.
                let watchers: Vec<usize> = q
                    .minus(m)
                    .iter()
                    .filter(|&u| m.iter().all(|x| !gov.has_edge(u, x)))
                    .collect();
                let sides: Vec<VertexSet> =
                    watchers.iter().map(|&u| left_right_sets(g, u).0).collect();
                let verts = m.to_vec();
                let key = |v: usize| -> Vec<bool> {
                    sides.iter().map(|l| l.contains(v)).collect()
                };
                out.extend(group_by_key(gov.n(), &verts, key));
            }
            MdKind::Serial => {
                // Equal unordered {L, R} traces on Q \ M.
                let rest = q.minus(m);
                let verts = m.to_vec();
                let key = |v: usize| -> Vec<Vec<usize>> {
                    let (l, r) = left_right_sets(g, v);
                    let mut pair =
                        vec![l.intersect(&rest).to_vec(), r.intersect(&rest).to_vec()];
                    pair.sort();
                    pair
                };
                out.extend(group_by_key(gov.n(), &verts, key));
            }
        }
    }
    out.sort_by_key(|s| s.first());
    out
}

fn group_by_key<K: Ord>(n: usize, verts: &[usize], key: impl Fn(usize) -> K) -> Vec<VertexSet> {
    let mut groups: BTreeMap<K, VertexSet> = BTreeMap::new();
    for &v in verts {
        groups.entry(key(v)).or_insert_with(|| VertexSet::empty(n)).insert(v);
    }
    groups.into_values().collect()
}

/// The P-node letters inside the two shortest enclosing blocks of a class `k`
/// in an extended conformal model.
pub fn inside_set(phi_q: &CircularWord, k: &VertexSet) -> Result<BTreeSet<Symbol>, PqsmError> {
    // Split the class letters into the two slot sides using the vertex-only word.
    let vertex_word = phi_q.restrict_letters(|l| l.superscript.is_some());
    let sel = |l: Letter| k.contains(l.symbol);
    let (b0, b1) = two_block_split(&vertex_word, &sel).ok_or(PqsmError::NotContiguous)?;
    let mut inside = BTreeSet::new();
    for (ours, others) in [(&b0, &b1), (&b1, &b0)] {
        let other_set: BTreeSet<Letter> = others.iter().copied().collect();
        let positions: Vec<usize> =
            ours.iter().map(|&l| phi_q.position_of(l).unwrap()).collect();
        let mut sorted = positions.clone();
        sorted.sort();
        let n = phi_q.len();
        // The shortest enclosing arc is the complement of the gap that holds
        // the other slot's letters.
        let mut excluded_gap = None;
        for i in 0..sorted.len() {
            let a = sorted[i];
            let b = sorted[(i + 1) % sorted.len()];
            let gap_has_other = (1..(b + n - a) % n.max(1)).any(|d| {
                let pos = (a + d) % n;
                other_set.contains(&phi_q.at(pos))
            });
            let gap_has_other = if sorted.len() == 1 {
                true
            } else {
                gap_has_other
            };
            if gap_has_other {
                if excluded_gap.is_some() && sorted.len() > 1 {
                    return Err(PqsmError::BlockNotContiguous);
                }
                excluded_gap = Some((a, b));
            }
        }
        let (ga, gb) = excluded_gap.ok_or(PqsmError::BlockNotContiguous)?;
        // Walk the enclosing arc from gb to ga collecting plain letters.
        let mut pos = gb;
        while pos != ga {
            let l = phi_q.at(pos);
            if l.superscript.is_none() {
                inside.insert(l.symbol);
            }
            pos = (pos + 1) % n;
        }
        if let Some(l) = Some(phi_q.at(ga)) {
            if l.superscript.is_none() {
                inside.insert(l.symbol);
            }
        }
    }
    Ok(inside)
}

/// Builds the complete CA-module data for one module set.
fn ca_module_data(
    gov: &Graph,
    phi: &ChordModel,
    s: &VertexSet,
    component: usize,
) -> Result<CaModuleData, PqsmError> {
    let metachord = metachord_of(phi, s)?;
    let (tau0, tau1) = slot_words_of(phi, s)?;
    let md = md_of_subgraph(gov, s);
    let pos0: BTreeMap<Symbol, usize> =
        tau0.letters().iter().enumerate().map(|(i, l)| (l.symbol, i)).collect();
    let pos1: BTreeMap<Symbol, usize> =
        tau1.letters().iter().enumerate().map(|(i, l)| (l.symbol, i)).collect();
    let mut orders: Vec<Option<NodeOrder>> = vec![None; md.nodes.len()];
    for i in 0..md.nodes.len() {
        if md.nodes[i].kind == MdKind::Leaf {
            continue;
        }
        let children = &md.nodes[i].children;
        let block_start = |c: usize, pos: &BTreeMap<Symbol, usize>| -> usize {
            md.nodes[c].vertices.iter().map(|v| pos[&v]).min().unwrap()
        };
        let mut pi0: Vec<usize> = (0..children.len()).collect();
        pi0.sort_by_key(|&ci| block_start(children[ci], &pos0));
        let mut pi1: Vec<usize> = (0..children.len()).collect();
        pi1.sort_by_key(|&ci| block_start(children[ci], &pos1));
        orders[i] = Some(NodeOrder { pi0, pi1 });
    }
    Ok(CaModuleData {
        vertices: s.clone(),
        representant: s.first().unwrap(),
        component,
        metachord,
        md,
        orders,
    })
}

/// Full assembly: normalized arc model -> conformal model -> CA-modules,
/// metachords, PQS-tree, and attached decomposition trees.
pub fn build_pqsm(g: &Graph, normalized: &ArcModel) -> Result<PqsmTree, PqsmError> {
    let phi = arcs_to_chords(normalized)?;
    let gov = phi.graph.clone();
    let md = modular_decomposition(&gov);
    let ca_sets = compute_ca_modules(&gov, &md, &phi);
    let components = gov.components_within(&VertexSet::full(gov.n()));
    let comp_of = |s: &VertexSet| -> usize {
        let v = s.first().unwrap();
        components.iter().position(|c| c.contains(v)).unwrap()
    };
    let mut cas = Vec::new();
    for s in &ca_sets {
        cas.push(ca_module_data(&gov, &phi, s, comp_of(s))?);
    }
    let pqs = build_pqs_tree(g, &gov, &md, &phi, &cas)?;
    Ok(PqsmTree { graph: g.clone(), gov, phi, cas, pqs })
}

/// DOT rendering of the PQSM-tree: box = P-node, ellipse = Q-node,
/// plaintext = S-node (slot), diamond = M-node.
pub fn to_dot(tree: &PqsmTree) -> String {
    let mut s = String::new();
    writeln!(s, "graph pqsm {{").unwrap();
    for (q, comp) in tree.pqs.components.iter().enumerate() {
        let pi = &tree.pqs.qorders[q];
        writeln!(
            s,
            "  q{q} [shape=ellipse, label=\"Q{q} {:?}\\nPi={pi}\"];",
            comp.to_vec()
        )
        .unwrap();
    }
    for (p, qs) in tree.pqs.pnodes.iter().enumerate() {
        writeln!(s, "  p{p} [shape=box, label=\"P{p}\\nPi=all orders\"];").unwrap();
        for &q in qs {
            writeln!(s, "  p{p} -- q{q};").unwrap();
        }
    }
    for (i, ca) in tree.cas.iter().enumerate() {
        for flavor in [0, 1] {
            writeln!(s, "  s{i}_{flavor} [shape=plaintext, label=\"S{i}^{flavor}\"];").unwrap();
            writeln!(s, "  s{i}_{flavor} -- q{};", ca.component).unwrap();
        }
        for (mi, node) in ca.md.nodes.iter().enumerate() {
            let kind = format!("{:?}", node.kind);
            writeln!(
                s,
                "  m{i}_{mi} [shape=diamond, label=\"{kind} {:?}\"];",
                node.vertices.to_vec()
            )
            .unwrap();
            if let Some(parent) = node.parent {
                writeln!(s, "  m{i}_{mi} -- m{i}_{parent};").unwrap();
            }
        }
        writeln!(s, "  m{i}_{} -- s{i}_0;", ca.md.root).unwrap();
    }
    writeln!(s, "}}").unwrap();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{check_normalized, normalize};
    use crate::words::rotate_equal;

    /// The nine-vertex worked example: a..i = 0..8, base conformal model
    /// reconstructed from the printed slot order and admissible models.
    pub(crate) fn worked_example_word() -> CircularWord {
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
        CircularWord::new(spec.iter().map(|&(s, b)| Letter::sup(s, b)).collect())
    }

    pub(crate) fn worked_example() -> (Graph, ArcModel) {
        let w = worked_example_word();
        let m = ArcModel::from_word(w, 9).unwrap();
        (m.graph.clone(), m)
    }

    #[test]
    fn worked_example_is_normalized() {
        let (g, m) = worked_example();
        assert!(check_normalized(&g, &m).is_empty());
        let norm = normalize(&g, &m).unwrap();
        assert_eq!(norm.word, m.word);
    }

    #[test]
    fn worked_example_ca_modules_and_slots() {
        let (g, m) = worked_example();
        let tree = build_pqsm(&g, &m).unwrap();
        let sets: Vec<Vec<usize>> = tree.cas.iter().map(|c| c.vertices.to_vec()).collect();
        assert_eq!(
            sets,
            vec![vec![0, 1, 2, 3, 4], vec![5], vec![6], vec![7, 8]],
            "four CA-modules"
        );
        let reps: Vec<usize> = tree.cas.iter().map(|c| c.representant).collect();
        assert_eq!(reps, vec![0, 5, 6, 7]);

        // Slots as printed: S1^0 = {a0,b0,c1,d0,e1}, S4^0 = {h0,i1}, etc.
        let s10: BTreeSet<Letter> = [
            Letter::sup(0, 0),
            Letter::sup(1, 0),
            Letter::sup(2, 1),
            Letter::sup(3, 0),
            Letter::sup(4, 1),
        ]
        .into();
        assert_eq!(tree.cas[0].metachord.s0, s10);
        let s11: BTreeSet<Letter> = [
            Letter::sup(0, 1),
            Letter::sup(1, 1),
            Letter::sup(2, 0),
            Letter::sup(3, 1),
            Letter::sup(4, 0),
        ]
        .into();
        assert_eq!(tree.cas[0].metachord.s1, s11);
        let s40: BTreeSet<Letter> = [Letter::sup(7, 0), Letter::sup(8, 1)].into();
        assert_eq!(tree.cas[3].metachord.s0, s40);

        // <_{S1} = {b<a, c<a, d<a, e<a, c<b, e<d}; <_{S4} = {i<h}.
        let expected_lt: BTreeSet<(usize, usize)> =
            [(1, 0), (2, 0), (3, 0), (4, 0), (2, 1), (4, 3)].into();
        assert_eq!(tree.cas[0].metachord.lt.pairs(), &expected_lt);
        let expected_s4: BTreeSet<(usize, usize)> = [(8, 7)].into();
        assert_eq!(tree.cas[3].metachord.lt.pairs(), &expected_s4);
        assert!(tree.cas[1].metachord.lt.is_empty());
        assert!(tree.cas[2].metachord.lt.is_empty());
    }

    #[test]
    fn worked_example_pqs_tree() {
        let (g, m) = worked_example();
        let tree = build_pqsm(&g, &m).unwrap();
        assert_eq!(tree.pqs.root, RootKind::Prime);
        assert_eq!(tree.pqs.components.len(), 1);
        // Pi = {pi, pi^R} with pi = S1^1 S2^1 S4^1 S1^0 S3^0 S4^0 S3^1 S2^0.
        let pi = CircularWord::new(vec![
            Letter::sup(0, 1),
            Letter::sup(1, 1),
            Letter::sup(3, 1),
            Letter::sup(0, 0),
            Letter::sup(2, 0),
            Letter::sup(3, 0),
            Letter::sup(2, 1),
            Letter::sup(1, 0),
        ]);
        let stored = &tree.pqs.qorders[0];
        assert!(
            rotate_equal(stored, &pi) || rotate_equal(stored, &pi.reflect()),
            "stored slot order is pi or its reflection: {stored}"
        );
    }

    #[test]
    fn worked_example_rule_r_agrees() {
        let (g, m) = worked_example();
        let tree = build_pqsm(&g, &m).unwrap();
        let phi = arcs_to_chords(&m).unwrap();
        let md = modular_decomposition(&tree.gov);
        let bottom_up = compute_ca_modules(&tree.gov, &md, &phi);
        let definitional = ca_modules_definitional(&tree.gov, &phi);
        assert_eq!(bottom_up, definitional);
    }

    #[test]
    fn k_relation_matches_ca_modules_on_prime_root() {
        let (g, m) = worked_example();
        let tree = build_pqsm(&g, &m).unwrap();
        let md = modular_decomposition(&tree.gov);
        assert_eq!(md.nodes[md.root].kind, MdKind::Prime);
        let classes = k_relation_prime(&g, &tree.gov, &VertexSet::full(tree.gov.n()));
        let expected: Vec<Vec<usize>> =
            tree.cas.iter().map(|c| c.vertices.to_vec()).collect();
        let got: Vec<Vec<usize>> = classes.iter().map(|s| s.to_vec()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn stored_orders_follow_phi() {
        let (g, m) = worked_example();
        let tree = build_pqsm(&g, &m).unwrap();
        // S1 = {a..e}: md of (S1,~) is parallel root {a | bcde}; the serial
        // node {b,c,d,e} has children {b,c} and {d,e}.
        let ca = &tree.cas[0];
        let root = &ca.md.nodes[ca.md.root];
        assert_eq!(root.kind, MdKind::Parallel);
        let serial = root
            .children
            .iter()
            .copied()
            .find(|&c| ca.md.nodes[c].kind == MdKind::Serial)
            .expect("serial child");
        assert_eq!(ca.md.nodes[serial].vertices.to_vec(), vec![1, 2, 3, 4]);
        // tau0 = c1 b0 e1 d0 a0: the {b,c} block precedes the {d,e} block.
        let order = ca.orders[serial].as_ref().unwrap();
        let first = ca.md.nodes[ca.md.nodes[serial].children[order.pi0[0]]].vertices.to_vec();
        assert_eq!(first, vec![1, 2]);
        assert_eq!(order.pi0, order.pi1, "serial orderings agree in both words");
    }

    #[test]
    fn parallel_root_pnodes_match_separation_oracle() {
        // Normalized P4: its overlap graph is edgeless, so the PQS-tree has
        // four singleton Q-nodes whose P-nodes come from gap recovery.
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
        let norm = normalize(&g, &m).unwrap();
        let tree = build_pqsm(&g, &norm).unwrap();
        assert_eq!(tree.pqs.root, RootKind::Parallel);
        assert_eq!(tree.pqs.components.len(), 4);
        let oracle = pnodes_definitional(&g, &tree.pqs.components);
        assert_eq!(tree.pqs.pnodes, oracle);
        // The Q-P structure is a tree: #edges = #nodes - 1.
        let edges: usize = tree.pqs.pnodes.iter().map(|p| p.len()).sum();
        assert_eq!(edges, tree.pqs.components.len() + tree.pqs.pnodes.len() - 1);

        // Extended models replace each adjacent P side by one P letter.
        let phi = arcs_to_chords(&norm).unwrap();
        for q in 0..4 {
            let ext = extended_model(&phi, &tree.pqs, q).unwrap();
            let plains = ext.letters().iter().filter(|l| l.superscript.is_none()).count();
            assert_eq!(plains, tree.pqs.pnodes_of(q).len());
            assert_eq!(ext.len(), 2 + plains);
        }
    }

    #[test]
    fn dot_export_mentions_all_node_shapes() {
        let (g, m) = worked_example();
        let tree = build_pqsm(&g, &m).unwrap();
        let dot = to_dot(&tree);
        assert!(dot.contains("shape=ellipse"));
        assert!(dot.contains("shape=plaintext"));
        assert!(dot.contains("shape=diamond"));
    }
}
