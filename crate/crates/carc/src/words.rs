//! Circular and linear words over superscripted letters.
//!
//! A letter is a symbol with an optional superscript bit. Arc models use the
//! superscripted letters `v^0` (arc start) and `v^1` (arc end); plain letters
//! stand for auxiliary marks such as P-nodes. A circular word is a sequence of
//! distinct letters up to cyclic rotation; words are stored in their
//! lexicographically least rotation so that rotation-equality, hashing and set
//! membership are plain comparisons.

use std::collections::BTreeSet;
use std::fmt;

/// Opaque letter symbol. Vertices use their index; auxiliary letters
/// (collapsed modules, P-nodes) are allocated above the vertex range.
pub type Symbol = usize;

/// A superscripted or plain letter.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub symbol: Symbol,
    /// `Some(0)` / `Some(1)` for superscripted letters, `None` for plain ones.
    pub superscript: Option<u8>,
}

impl Letter {
    pub fn sup(symbol: Symbol, bit: u8) -> Self {
        debug_assert!(bit <= 1);
        Letter { symbol, superscript: Some(bit) }
    }

    pub fn plain(symbol: Symbol) -> Self {
        Letter { symbol, superscript: None }
    }

    /// Swaps the superscript 0 <-> 1; plain letters are unchanged.
    pub fn flipped(self) -> Self {
        Letter { symbol: self.symbol, superscript: self.superscript.map(|b| 1 - b) }
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.superscript {
            Some(b) => write!(f, "v{}^{}", self.symbol, b),
            None => write!(f, "x{}", self.symbol),
        }
    }
}

impl std::str::FromStr for Letter {
    type Err = String;

    /// Parses the token format `v<id>^<bit>` (plain letters are not part of
    /// any external format).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rest = s.strip_prefix('v').ok_or_else(|| format!("bad letter token {s:?}"))?;
        let (id, bit) = rest.split_once('^').ok_or_else(|| format!("bad letter token {s:?}"))?;
        let symbol: usize = id.parse().map_err(|_| format!("bad vertex id in {s:?}"))?;
        match bit {
            "0" => Ok(Letter::sup(symbol, 0)),
            "1" => Ok(Letter::sup(symbol, 1)),
            _ => Err(format!("bad superscript in {s:?}")),
        }
    }
}

/// Index of the lexicographically least rotation of `s` (Booth's algorithm).
pub(crate) fn least_rotation_index<T: Ord>(s: &[T]) -> usize {
    let n = s.len();
    if n <= 1 {
        return 0;
    }
    let at = |i: usize| &s[i % n];
    let (mut i, mut j, mut k) = (0usize, 1usize, 0usize);
    while i < n && j < n && k < n {
        let (a, b) = (at(i + k), at(j + k));
        if a == b {
            k += 1;
            continue;
        }
        if a > b {
            i += k + 1;
        } else {
            j += k + 1;
        }
        if i == j {
            j += 1;
        }
        k = 0;
    }
    i.min(j)
}

/// A circular word with pairwise distinct letters, stored in its least rotation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CircularWord {
    letters: Vec<Letter>,
}

impl CircularWord {
    /// Builds a circular word. Panics if two positions hold the same letter.
    pub fn new(mut letters: Vec<Letter>) -> Self {
        assert!(distinct(&letters), "circular word has repeated letters");
        let k = least_rotation_index(&letters);
        letters.rotate_left(k);
        CircularWord { letters }
    }

    pub fn empty() -> Self {
        CircularWord { letters: Vec::new() }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn contains(&self, l: Letter) -> bool {
        self.letters.contains(&l)
    }

    pub fn position_of(&self, l: Letter) -> Option<usize> {
        self.letters.iter().position(|&x| x == l)
    }

    /// Letter at a circular position.
    pub fn at(&self, i: usize) -> Letter {
        self.letters[i % self.letters.len()]
    }

    /// The reflection: letters reversed, superscripts 0 <-> 1 swapped.
    pub fn reflect(&self) -> Self {
        let mut v: Vec<Letter> = self.letters.iter().rev().map(|l| l.flipped()).collect();
        let k = least_rotation_index(&v);
        v.rotate_left(k);
        CircularWord { letters: v }
    }

    /// Keeps exactly the letters whose symbol is in `symbols`, cyclic order preserved.
    pub fn restrict(&self, symbols: &BTreeSet<Symbol>) -> Self {
        CircularWord::new(
            self.letters.iter().copied().filter(|l| symbols.contains(&l.symbol)).collect(),
        )
    }

    /// Keeps exactly the letters satisfying `keep`, cyclic order preserved.
    pub fn restrict_letters<F: Fn(Letter) -> bool>(&self, keep: F) -> Self {
        CircularWord::new(self.letters.iter().copied().filter(|&l| keep(l)).collect())
    }

    /// If the letters of `subset` occupy `|subset|` consecutive positions of
    /// some rotation, returns that block as a linear word; `None` otherwise.
    /// When `subset` covers the whole word the stored rotation is returned.
    pub fn contiguous_subword(&self, subset: &BTreeSet<Letter>) -> Option<LinearWord> {
        let n = self.letters.len();
        let k = subset.len();
        if k == 0 {
            return Some(LinearWord::new(Vec::new()));
        }
        debug_assert!(self.letters.iter().filter(|l| subset.contains(l)).count() == k);
        if k == n {
            return Some(LinearWord::new(self.letters.clone()));
        }
        // A block exists iff some position starts k consecutive subset letters
        // preceded by a non-subset letter.
        for start in 0..n {
            if subset.contains(&self.at(start)) && !subset.contains(&self.at(start + n - 1)) {
                let block: Vec<Letter> = (0..k).map(|i| self.at(start + i)).collect();
                if block.iter().all(|l| subset.contains(l)) {
                    return Some(LinearWord::new(block));
                }
                return None;
            }
        }
        None
    }

    /// The word rotated so that `start` comes first (a concrete representative).
    pub fn rotation_from(&self, start: usize) -> Vec<Letter> {
        let n = self.letters.len();
        (0..n).map(|i| self.at(start + i)).collect()
    }
}

impl fmt::Debug for CircularWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for CircularWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", join(&self.letters))
    }
}

/// A linear word with pairwise distinct letters.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearWord {
    letters: Vec<Letter>,
}

impl LinearWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        assert!(distinct(&letters), "linear word has repeated letters");
        LinearWord { letters }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn position_of(&self, l: Letter) -> Option<usize> {
        self.letters.iter().position(|&x| x == l)
    }

    /// Reversal with superscripts swapped (the linear-word reflection).
    pub fn reflect(&self) -> Self {
        LinearWord { letters: self.letters.iter().rev().map(|l| l.flipped()).collect() }
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        self.letters.iter().map(|l| l.symbol).collect()
    }
}

impl fmt::Debug for LinearWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for LinearWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", join(&self.letters))
    }
}

fn join(letters: &[Letter]) -> String {
    letters.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")
}

fn distinct(letters: &[Letter]) -> bool {
    let set: BTreeSet<&Letter> = letters.iter().collect();
    set.len() == letters.len()
}

/// True iff some cyclic rotation of `a` equals `b`.
pub fn rotate_equal(a: &CircularWord, b: &CircularWord) -> bool {
    // Words are stored in their least rotation, so this is plain equality.
    a == b
}

/// An oriented permutation model: two linear words spanning the two sides of
/// a permutation diagram, each holding one superscripted copy of every vertex.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OrientedPermutationModel {
    pub tau0: LinearWord,
    pub tau1: LinearWord,
    pub vertex_set: BTreeSet<Symbol>,
}

impl OrientedPermutationModel {
    pub fn new(tau0: LinearWord, tau1: LinearWord) -> Self {
        let vertex_set: BTreeSet<Symbol> = tau0.symbols();
        assert_eq!(vertex_set, tau1.symbols(), "words carry different vertex sets");
        assert_eq!(tau0.len(), vertex_set.len());
        for &v in &vertex_set {
            let c0 = tau0.letters().iter().filter(|l| l.symbol == v).count();
            let c1 = tau1.letters().iter().filter(|l| l.symbol == v).count();
            assert!(c0 == 1 && c1 == 1, "vertex {v} does not split across the words");
            let l0 = tau0.letters().iter().find(|l| l.symbol == v).unwrap();
            let l1 = tau1.letters().iter().find(|l| l.symbol == v).unwrap();
            assert!(
                l0.superscript.is_some() && *l1 == l0.flipped(),
                "vertex {v} must contribute one superscripted copy per word"
            );
        }
        OrientedPermutationModel { tau0, tau1, vertex_set }
    }

    /// The reflection: words swapped, each reversed with superscripts flipped.
    pub fn reflect(&self) -> Self {
        OrientedPermutationModel::new(self.tau1.reflect(), self.tau0.reflect())
    }
}

/// Splits the `U`-letters of `w` into the two contiguous blocks of a
/// consistent permutation model, if they form one.
///
/// The first block is the one containing `r^0` for the smallest symbol
/// `r` in `U`; when the whole word is over `U` (no outside letters) the split
/// starting exactly at `r^0` is preferred.
pub fn consistent_permutation_model(
    w: &CircularWord,
    u: &BTreeSet<Symbol>,
) -> Option<OrientedPermutationModel> {
    let blocks = two_block_split(w, &|l: Letter| u.contains(&l.symbol))?;
    let r = *u.iter().next().expect("U must be non-empty");
    let r0 = Letter::sup(r, 0);
    let (mu1, mu2) = blocks;
    let (first, second) = if mu1.iter().any(|&l| l == r0) { (mu1, mu2) } else { (mu2, mu1) };
    Some(OrientedPermutationModel::new(LinearWord::new(first), LinearWord::new(second)))
}

/// Splits the letters selected by `sel` into two contiguous blocks such that
/// every selected symbol has exactly one letter in each block. Returns `None`
/// if no such split exists. Block order is unspecified.
pub(crate) fn two_block_split(
    w: &CircularWord,
    sel: &dyn Fn(Letter) -> bool,
) -> Option<(Vec<Letter>, Vec<Letter>)> {
    let n = w.len();
    let selected: Vec<usize> = (0..n).filter(|&i| sel(w.at(i))).collect();
    let m = selected.len();
    if m == 0 || m % 2 != 0 {
        return None;
    }
    let half = m / 2;
    let valid = |a: &[Letter], b: &[Letter]| -> bool {
        let syms: BTreeSet<Symbol> = a.iter().map(|l| l.symbol).collect();
        syms.len() == half
            && b.iter().all(|l| syms.contains(&l.symbol))
            && a.iter().chain(b).all(|l| l.superscript.is_some())
    };

    // Maximal circular runs of selected positions.
    let runs = circular_runs(&selected, n);
    match runs.len() {
        1 => {
            let run = &runs[0];
            if run.len() == n {
                // The whole word is selected: try splits keeping the smallest
                // symbol's 0-letter in the first block, earliest-start first.
                let rmin = run
                    .iter()
                    .map(|&p| w.at(p).symbol)
                    .min()
                    .expect("non-empty run");
                let r0 = Letter::sup(rmin, 0);
                let p0 = w.position_of(r0)?;
                for back in 0..half {
                    let start = (p0 + n - back) % n;
                    let a: Vec<Letter> = (0..half).map(|i| w.at(start + i)).collect();
                    let b: Vec<Letter> = (0..half).map(|i| w.at(start + half + i)).collect();
                    if valid(&a, &b) {
                        return Some((a, b));
                    }
                }
                None
            } else {
                // One block of 2*half letters inside a larger word: the only
                // candidate split is down the middle.
                let a: Vec<Letter> = run[..half].iter().map(|&p| w.at(p)).collect();
                let b: Vec<Letter> = run[half..].iter().map(|&p| w.at(p)).collect();
                if valid(&a, &b) {
                    Some((a, b))
                } else {
                    None
                }
            }
        }
        2 => {
            let a: Vec<Letter> = runs[0].iter().map(|&p| w.at(p)).collect();
            let b: Vec<Letter> = runs[1].iter().map(|&p| w.at(p)).collect();
            if a.len() == half && valid(&a, &b) {
                Some((a, b))
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Groups sorted positions into maximal circularly-consecutive runs.
fn circular_runs(positions: &[usize], n: usize) -> Vec<Vec<usize>> {
    if positions.is_empty() {
        return Vec::new();
    }
    let set: BTreeSet<usize> = positions.iter().copied().collect();
    let mut runs: Vec<Vec<usize>> = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    for &p in positions {
        if cur.is_empty() || *cur.last().unwrap() + 1 == p {
            cur.push(p);
        } else {
            runs.push(std::mem::take(&mut cur));
            cur.push(p);
        }
    }
    runs.push(cur);
    // Merge the wrap-around: last run ending at n-1 joins a run starting at 0.
    if runs.len() > 1 && set.contains(&(n - 1)) && set.contains(&0) {
        let last = runs.pop().unwrap();
        let mut first = last;
        first.extend(runs.remove(0));
        runs.push(first);
    }
    runs
}
