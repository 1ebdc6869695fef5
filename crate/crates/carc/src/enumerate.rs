//! Enumeration of all conformal models represented by a PQSM-tree: the
//! admissible permutation models of each metachord, the circular slot orders
//! of the PQS-tree, and their composition.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::pqsm::{CaModuleData, PqsTree, PqsmTree, RootKind};
use crate::moddecomp::MdKind;
use crate::words::{rotate_equal, CircularWord, Letter, LinearWord, OrientedPermutationModel};

pub const DEFAULT_CAP: usize = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnumError {
    #[error("enumeration needs {needed} candidates, over the cap of {cap}")]
    CapExceeded { needed: u128, cap: usize },
}

/// All permutation models admissible by the metachord of `ca`: one per
/// transitive orientation of `(S, ~)`, realized by per-node orderings of the
/// attached decomposition tree (stored order first, reflection second for
/// prime nodes; every child order for serial nodes).
pub fn admissible_models(ca: &CaModuleData) -> Vec<OrientedPermutationModel> {
    let letter0 = |v: usize| -> Letter {
        *ca.metachord.s0.iter().find(|l| l.symbol == v).expect("vertex letter in slot 0")
    };
    let letter1 = |v: usize| -> Letter {
        *ca.metachord.s1.iter().find(|l| l.symbol == v).expect("vertex letter in slot 1")
    };
    let mut results = realize(ca, ca.md.root, &letter0, &letter1);
    results.sort();
    results.dedup();
    results
        .into_iter()
        .map(|(w0, w1)| OrientedPermutationModel::new(LinearWord::new(w0), LinearWord::new(w1)))
        .collect()
}

/// Block words (tau0|M0, tau1|M1) realizable at one node of the tree.
fn realize(
    ca: &CaModuleData,
    node: usize,
    letter0: &dyn Fn(usize) -> Letter,
    letter1: &dyn Fn(usize) -> Letter,
) -> Vec<(Vec<Letter>, Vec<Letter>)> {
    let n = &ca.md.nodes[node];
    if n.kind == MdKind::Leaf {
        let v = n.vertices.first().unwrap();
        return vec![(vec![letter0(v)], vec![letter1(v)])];
    }
    let children = &n.children;
    let per_child: Vec<Vec<(Vec<Letter>, Vec<Letter>)>> =
        children.iter().map(|&c| realize(ca, c, letter0, letter1)).collect();
    let order = ca.orders[node].as_ref().expect("inner node has a stored order");
    // Candidate (delta0, delta1) ordering pairs per node kind.
    let orderings: Vec<(Vec<usize>, Vec<usize>)> = match n.kind {
        MdKind::Parallel => vec![(order.pi0.clone(), order.pi1.clone())],
        MdKind::Prime => {
            let refl0: Vec<usize> = order.pi1.iter().rev().copied().collect();
            let refl1: Vec<usize> = order.pi0.iter().rev().copied().collect();
            let mut v = vec![(order.pi0.clone(), order.pi1.clone())];
            if (refl0.clone(), refl1.clone()) != (order.pi0.clone(), order.pi1.clone()) {
                v.push((refl0, refl1));
            }
            v
        }
        MdKind::Serial => {
            let mut out = Vec::new();
            let mut perm: Vec<usize> = (0..children.len()).collect();
            loop {
                out.push((perm.clone(), perm.clone()));
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            out
        }
        MdKind::Leaf => unreachable!(),
    };
    let mut out = Vec::new();
    let mut choice = vec![0usize; children.len()];
    loop {
        for (d0, d1) in &orderings {
            let mut w0 = Vec::new();
            for &ci in d0 {
                w0.extend_from_slice(&per_child[ci][choice[ci]].0);
            }
            let mut w1 = Vec::new();
            for &ci in d1 {
                w1.extend_from_slice(&per_child[ci][choice[ci]].1);
            }
            out.push((w0, w1));
        }
        let mut pos = 0;
        loop {
            if pos == children.len() {
                return out;
            }
            choice[pos] += 1;
            if choice[pos] < per_child[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
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

/// True iff the two slot pairs interleave (cross as chords) in `pi`.
fn slots_overlap(pi: &CircularWord, i: usize, j: usize) -> bool {
    let n = pi.len();
    let pi0 = pi.position_of(Letter::sup(i, 0)).unwrap();
    let pi1 = pi.position_of(Letter::sup(i, 1)).unwrap();
    let pj0 = pi.position_of(Letter::sup(j, 0)).unwrap();
    let inside = |x: usize| {
        let d = (x + n - pi0) % n;
        d > 0 && d < (pi1 + n - pi0) % n
    };
    let pj1 = pi.position_of(Letter::sup(j, 1)).unwrap();
    inside(pj0) != inside(pj1)
}

/// The set Pi of circular slot orders represented by the PQS-tree.
///
/// For a serial root the set is materialized by filtering all circular orders
/// for the pairwise-overlap constraint, capped at `cap` candidates; for a
/// prime root it is the stored order and its reflection; for a parallel root
/// it is produced by boundary walks of the plane-embedded ordered tree.
pub fn slot_orders(pqs: &PqsTree, cap: usize) -> Result<Vec<CircularWord>, EnumError> {
    let t = pqs.n_cas;
    let mut out: BTreeSet<CircularWord> = BTreeSet::new();
    match pqs.root {
        RootKind::Prime => {
            let pi = pqs.qorders[0].clone();
            out.insert(pi.reflect());
            out.insert(pi);
        }
        RootKind::Serial => {
            let needed: u128 = (1..=(2 * t as u128 - 1)).product();
            if needed > cap as u128 {
                return Err(EnumError::CapExceeded { needed, cap });
            }
            // Pin slot 0^0 first; permute the rest; keep pairwise-overlapping
            // arrangements.
            let mut rest: Vec<Letter> = Vec::new();
            for i in 0..t {
                for b in [0u8, 1u8] {
                    if i != 0 || b != 0 {
                        rest.push(Letter::sup(i, b));
                    }
                }
            }
            rest.sort();
            loop {
                let mut letters = vec![Letter::sup(0, 0)];
                letters.extend_from_slice(&rest);
                let pi = CircularWord::new(letters);
                let ok = (0..t)
                    .all(|i| (i + 1..t).all(|j| slots_overlap(&pi, i, j)));
                if ok {
                    out.insert(pi);
                }
                if !next_permutation(&mut rest) {
                    break;
                }
            }
        }
        RootKind::Parallel => {
            let orders = parallel_slot_orders(pqs, cap)?;
            out.extend(orders);
        }
    }
    Ok(out.into_iter().collect())
}

/// Node handle inside the plane-embedded PQS-tree.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum TreeNode {
    Q(usize),
    P(usize),
    S(usize, u8),
}

fn parallel_slot_orders(pqs: &PqsTree, cap: usize) -> Result<Vec<CircularWord>, EnumError> {
    let nq = pqs.components.len();
    let np = pqs.pnodes.len();
    // Choice spaces: Q-nodes have the stored order and possibly its
    // reflection; P-nodes every circular order of their neighbors.
    let q_choices: Vec<Vec<CircularWord>> = (0..nq)
        .map(|q| {
            let stored = pqs.qorders[q].clone();
            let refl = stored.reflect();
            if rotate_equal(&stored, &refl) {
                vec![stored]
            } else {
                vec![stored, refl]
            }
        })
        .collect();
    let p_choices: Vec<Vec<Vec<usize>>> = (0..np)
        .map(|p| {
            let members = pqs.pnodes[p].clone();
            // Circular orders: first member pinned.
            let mut rest: Vec<usize> = members[1..].to_vec();
            let mut all = Vec::new();
            loop {
                let mut order = vec![members[0]];
                order.extend_from_slice(&rest);
                all.push(order);
                if !next_permutation(&mut rest) {
                    break;
                }
            }
            all
        })
        .collect();
    let total: u128 = q_choices.iter().map(|c| c.len() as u128).product::<u128>()
        * p_choices.iter().map(|c| c.len() as u128).product::<u128>();
    if total > cap as u128 {
        return Err(EnumError::CapExceeded { needed: total, cap });
    }

    let mut qc = vec![0usize; nq];
    let mut pc = vec![0usize; np];
    let mut out = Vec::new();
    loop {
        out.push(boundary_walk(pqs, &qc, &pc, &q_choices, &p_choices));
        // Advance the combined choice vector.
        let mut pos = 0;
        let advanced = loop {
            if pos < nq {
                qc[pos] += 1;
                if qc[pos] < q_choices[pos].len() {
                    break true;
                }
                qc[pos] = 0;
                pos += 1;
            } else if pos < nq + np {
                let i = pos - nq;
                pc[i] += 1;
                if pc[i] < p_choices[i].len() {
                    break true;
                }
                pc[i] = 0;
                pos += 1;
            } else {
                break false;
            }
        };
        if !advanced {
            return Ok(out);
        }
    }
}

/// Lists the slots on the boundary of the plane tree embedded with the chosen
/// rotations.
fn boundary_walk(
    pqs: &PqsTree,
    qc: &[usize],
    pc: &[usize],
    q_choices: &[Vec<CircularWord>],
    p_choices: &[Vec<Vec<usize>>],
) -> CircularWord {
    let rotation = |node: TreeNode| -> Vec<TreeNode> {
        match node {
            TreeNode::Q(q) => q_choices[q][qc[q]]
                .letters()
                .iter()
                .map(|&l| match pqs.p_index_of(l) {
                    Some(p) => TreeNode::P(p),
                    None => TreeNode::S(l.symbol, l.superscript.unwrap()),
                })
                .collect(),
            TreeNode::P(p) => {
                p_choices[p][pc[p]].iter().map(|&q| TreeNode::Q(q)).collect()
            }
            TreeNode::S(ca, _) => vec![TreeNode::Q(pqs.components
                .iter()
                .position(|c| c.contains(
                    // component of the CA-module
                    pqs_ca_vertex(pqs, ca)
                ))
                .unwrap())],
        }
    };
    // Start on the dart from slot (0,0) into its component.
    let start_s = TreeNode::S(0, 0);
    let start = (start_s, rotation(start_s)[0]);
    let mut slots = Vec::new();
    let mut dart = start;
    loop {
        let (from, to) = dart;
        if let TreeNode::S(ca, b) = to {
            slots.push(Letter::sup(ca, b));
        }
        // Next dart: leave `to` along the successor of `from` in its rotation.
        let rot = rotation(to);
        let idx = rot.iter().position(|&x| x == from).expect("edge in rotation");
        let next = rot[(idx + 1) % rot.len()];
        dart = (to, next);
        if dart == start {
            break;
        }
    }
    CircularWord::new(slots)
}

/// Any vertex of the CA-module `ca` (used to find its component).
fn pqs_ca_vertex(pqs: &PqsTree, ca: usize) -> usize {
    for (q, list) in pqs.cas_of_component.iter().enumerate() {
        if list.contains(&ca) {
            return pqs.components[q].first().unwrap();
        }
    }
    unreachable!("CA-module belongs to a component")
}

/// Every conformal model represented by the tree: pick a slot order, then an
/// admissible model per metachord, substitute, deduplicate up to rotation.
pub fn enumerate_conformal(
    tree: &PqsmTree,
    cap: usize,
) -> Result<BTreeSet<CircularWord>, EnumError> {
    let pis = slot_orders(&tree.pqs, cap)?;
    let adms: Vec<Vec<OrientedPermutationModel>> =
        tree.cas.iter().map(admissible_models).collect();
    let total: u128 = pis.len() as u128
        * adms.iter().map(|a| a.len() as u128).product::<u128>();
    if total > cap as u128 {
        return Err(EnumError::CapExceeded { needed: total, cap });
    }
    let mut out = BTreeSet::new();
    let mut choice = vec![0usize; tree.cas.len()];
    loop {
        for pi in &pis {
            let mut letters = Vec::with_capacity(2 * tree.gov.n());
            for &slot in pi.letters() {
                let (ca, b) = (slot.symbol, slot.superscript.unwrap());
                let m = &adms[ca][choice[ca]];
                let word = if b == 0 { &m.tau0 } else { &m.tau1 };
                letters.extend_from_slice(word.letters());
            }
            out.insert(CircularWord::new(letters));
        }
        let mut pos = 0;
        loop {
            if pos == tree.cas.len() {
                return Ok(out);
            }
            choice[pos] += 1;
            if choice[pos] < adms[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// True iff `w` decomposes as a slot order from Pi with per-slot blocks
/// forming models admissible by the metachords.
pub fn is_admissible(w: &CircularWord, tree: &PqsmTree) -> bool {
    // Each slot's letters must be contiguous, and the block pair must induce
    // the metachord's fixed orientation of the non-adjacent pairs.
    let mut collapsed: Vec<Option<Letter>> = vec![None; w.len()];
    for (i, ca) in tree.cas.iter().enumerate() {
        let b0 = match w.contiguous_subword(&ca.metachord.s0) {
            Some(b) => b,
            None => return false,
        };
        let b1 = match w.contiguous_subword(&ca.metachord.s1) {
            Some(b) => b,
            None => return false,
        };
        // Orientation check: x < y iff x before y in tau0 for non-adjacent x,y.
        for x in ca.vertices.iter() {
            for y in ca.vertices.iter() {
                if x == y || tree.gov.has_edge(x, y) {
                    continue;
                }
                let bx = b0.letters().iter().position(|l| l.symbol == x).unwrap();
                let by = b0.letters().iter().position(|l| l.symbol == y).unwrap();
                if (bx < by) != ca.metachord.lt.contains(x, y) {
                    return false;
                }
            }
        }
        // Record the slot letters for the order word.
        let start0 = w.position_of(b0.letters()[0]).unwrap();
        collapsed[start0] = Some(Letter::sup(i, 0));
        let start1 = w.position_of(b1.letters()[0]).unwrap();
        collapsed[start1] = Some(Letter::sup(i, 1));
    }
    // Build pi(w): slot letters in the order their blocks start. The blocks
    // tile the word, so walking positions and keeping block starts is enough.
    let pi = CircularWord::new((0..w.len()).filter_map(|p| collapsed[p]).collect());

    match tree.pqs.root {
        RootKind::Prime => {
            let stored = &tree.pqs.qorders[0];
            rotate_equal(&pi, stored) || rotate_equal(&pi, &stored.reflect())
        }
        RootKind::Serial => {
            let t = tree.cas.len();
            (0..t).all(|i| (i + 1..t).all(|j| slots_overlap(&pi, i, j)))
        }
        RootKind::Parallel => parallel_order_ok(&tree.pqs, &pi),
    }
}

/// Structural membership test of a slot order for a parallel root: every
/// subtree side must be contiguous and every Q-node must read its stored
/// order or the reflection.
fn parallel_order_ok(pqs: &PqsTree, pi: &CircularWord) -> bool {
    for q in 0..pqs.components.len() {
        // Replace each adjacent P's side slots by the P letter.
        let mut mapped: Vec<Letter> = Vec::new();
        for &l in pi.letters() {
            let ca = l.symbol;
            let own_component =
                pqs.components.iter().position(|c| c.contains(pqs_ca_vertex(pqs, ca))).unwrap();
            if own_component == q {
                mapped.push(l);
            } else {
                // Which adjacent P-node covers this component?
                let p = pqs
                    .pnodes_of(q)
                    .into_iter()
                    .find(|&p| pqs.side_components(q, p).contains(&own_component));
                match p {
                    Some(p) => mapped.push(pqs.p_letter(p)),
                    None => return false,
                }
            }
        }
        // Collapse runs of equal P letters circularly.
        let m = mapped.len();
        let Some(start) = (0..m).find(|&i| mapped[i] != mapped[(i + m - 1) % m]) else {
            return false;
        };
        let mut out: Vec<Letter> = Vec::new();
        for k in 0..m {
            let l = mapped[(start + k) % m];
            if out.last() != Some(&l) {
                out.push(l);
            }
        }
        for p in pqs.pnodes_of(q) {
            if out.iter().filter(|&&l| l == pqs.p_letter(p)).count() != 1 {
                return false;
            }
        }
        let got = CircularWord::new(out);
        let stored = &pqs.qorders[q];
        if !rotate_equal(&got, stored) && !rotate_equal(&got, &stored.reflect()) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::Graph;
    use crate::models::{check_conformal, normalize, ArcModel};
    use crate::pqsm::build_pqsm;
    use crate::words::Letter;
    use std::collections::BTreeSet as Set;

    fn worked_example() -> (Graph, ArcModel) {
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
        (m.graph.clone(), m)
    }

    #[test]
    fn worked_example_admissible_models() {
        let (g, m) = worked_example();
        let tree = build_pqsm(&g, &m).unwrap();
        // S1 has exactly two admissible models:
        // tau = (c1 b0 e1 d0 a0, a1 b1 c0 d1 e0) and
        // mu  = (e1 d0 c1 b0 a0, a1 d1 e0 b1 c0).
        let adm = admissible_models(&tree.cas[0]);
        assert_eq!(adm.len(), 2);
        let tau = (
            vec![(2, 1), (1, 0), (4, 1), (3, 0), (0, 0)],
            vec![(0, 1), (1, 1), (2, 0), (3, 1), (4, 0)],
        );
        let mu = (
            vec![(4, 1), (3, 0), (2, 1), (1, 0), (0, 0)],
            vec![(0, 1), (3, 1), (4, 0), (1, 1), (2, 0)],
        );
        let got: Set<(Vec<(usize, u8)>, Vec<(usize, u8)>)> = adm
            .iter()
            .map(|m| {
                (
                    m.tau0.letters().iter().map(|l| (l.symbol, l.superscript.unwrap())).collect(),
                    m.tau1.letters().iter().map(|l| (l.symbol, l.superscript.unwrap())).collect(),
                )
            })
            .collect();
        assert!(got.contains(&tau), "tau present: {got:?}");
        assert!(got.contains(&mu), "mu present");

        // Singleton metachords admit exactly one model.
        assert_eq!(admissible_models(&tree.cas[1]).len(), 1);
        assert_eq!(admissible_models(&tree.cas[2]).len(), 1);
        assert_eq!(admissible_models(&tree.cas[3]).len(), 1);

        // Reflection closure: the reflection of each admissible model is
        // admissible.
        for m in &adm {
            assert!(adm.contains(&m.reflect()));
        }

        // Post-hoc orientation check: every admissible model induces the
        // metachord's orientation of the parallel pairs.
        for m in &adm {
            let (lt, _) = crate::moddecomp::pm_to_orientations(m, &tree.gov).unwrap();
            assert_eq!(&lt, &tree.cas[0].metachord.lt);
        }
    }

    #[test]
    fn worked_example_four_models() {
        let (g, m) = worked_example();
        let tree = build_pqsm(&g, &m).unwrap();
        let pis = slot_orders(&tree.pqs, DEFAULT_CAP).unwrap();
        assert_eq!(pis.len(), 2, "Pi = {{pi, pi^R}}");
        let models = enumerate_conformal(&tree, DEFAULT_CAP).unwrap();
        assert_eq!(models.len(), 4, "exactly four non-equivalent conformal models");
        // Count factorization: 2 slot orders x 2 x 1 x 1 x 1 admissible.
        assert_eq!(2 * 2 * 1 * 1 * 1, 4);

        // Soundness, reflection closure, admissibility.
        let all: Set<usize> = (0..9).collect();
        for w in &models {
            assert!(check_conformal(&g, w, &all));
            assert!(models.contains(&w.reflect()));
            assert!(is_admissible(w, &tree));
        }
        // The base model is among them.
        assert!(models.contains(&m.word));

        // Swapping two letters inside a slot block breaks admissibility.
        let mut letters = m.word.letters().to_vec();
        let p0 = letters.iter().position(|&l| l == Letter::sup(2, 1)).unwrap();
        let p1 = letters.iter().position(|&l| l == Letter::sup(1, 0)).unwrap();
        letters.swap(p0, p1);
        let tweaked = CircularWord::new(letters);
        assert!(!is_admissible(&tweaked, &tree));
    }

    #[test]
    fn parallel_enumeration_p4() {
        // Normalized P4: parallel root with four singleton components.
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
        let models = enumerate_conformal(&tree, DEFAULT_CAP).unwrap();
        let brute = crate::oracle::brute_conformal_models(&g).unwrap();
        assert_eq!(models, brute);
        for w in &models {
            assert!(is_admissible(w, &tree));
        }
        assert!(models.contains(&norm.word));
    }

    #[test]
    fn cap_is_enforced() {
        let (g, m) = worked_example();
        let tree = build_pqsm(&g, &m).unwrap();
        assert!(matches!(
            enumerate_conformal(&tree, 1),
            Err(EnumError::CapExceeded { .. })
        ));
    }
}
