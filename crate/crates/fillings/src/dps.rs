//! The Dehn proof system: null-sequences, replay, and exact searches for
//! Area, FL and FFL of a single word.
//!
//! Search states are exact (possibly unreduced) words packed four bits per
//! letter into a `u128`, so searches support up to seven generators and words
//! of up to 32 letters.

use std::collections::VecDeque;
use std::fmt;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::presentation::{Presentation, Triviality, WordOracle};
use crate::words::{Alphabet, Letter, Word};

pub const MAX_PACKED_LEN: usize = 32;
pub const MAX_PACKED_GENERATORS: usize = 7;

/// One step of a P-sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Move {
    /// Delete the inverse pair at positions `at`, `at + 1`.
    FreeReduce { at: usize },
    /// Insert `letter letter⁻¹` before position `at`.
    FreeExpand { at: usize, letter: Letter },
    /// `closure` is a closure word u·v⁻¹ with ℓ(u) = `consumed`; the subword u
    /// starting at `at` is replaced by v.
    ApplyRelator { closure: Word, consumed: usize, at: usize },
    /// Rotate left by `offset` (only in free-basepoint mode).
    CyclicShift { offset: usize },
}

impl Move {
    pub fn is_relator(&self) -> bool {
        matches!(self, Move::ApplyRelator { .. })
    }

    /// Text form: `FR @i`, `FE x @i`, `R u|rest @i`, `CS k`.
    pub fn render(&self, a: &Alphabet) -> String {
        match self {
            Move::FreeReduce { at } => format!("FR @{at}"),
            Move::FreeExpand { at, letter } => format!("FE {} @{at}", a.letter_char(*letter)),
            Move::ApplyRelator { closure, consumed, at } => {
                let u = a.render(&closure.subword(0, *consumed));
                let rest = a.render(&closure.subword(*consumed, closure.len()));
                format!("R {u}|{rest} @{at}")
            }
            Move::CyclicShift { offset } => format!("CS {offset}"),
        }
    }

    pub fn parse(line: &str, a: &Alphabet) -> Result<Move, WitnessError> {
        let bad = || WitnessError::Syntax(line.to_string());
        let parts: Vec<&str> = line.split_whitespace().collect();
        let pos = |s: &str| -> Result<usize, WitnessError> {
            s.strip_prefix('@').and_then(|n| n.parse().ok()).ok_or_else(bad)
        };
        match parts.as_slice() {
            ["FR", p] => Ok(Move::FreeReduce { at: pos(p)? }),
            ["FE", l, p] => {
                let mut cs = l.chars();
                let letter = match (cs.next(), cs.next()) {
                    (Some(c), None) => a.parse_letter(c).ok_or_else(bad)?,
                    _ => return Err(bad()),
                };
                Ok(Move::FreeExpand { at: pos(p)?, letter })
            }
            ["R", c, p] => {
                let (u, rest) = c.split_once('|').ok_or_else(bad)?;
                let u = a.parse(u).map_err(|_| bad())?;
                let rest = a.parse(rest).map_err(|_| bad())?;
                Ok(Move::ApplyRelator { consumed: u.len(), closure: u.concat(&rest), at: pos(p)? })
            }
            ["CS", k] => Ok(Move::CyclicShift { offset: k.parse().map_err(|_| bad())? }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("cannot parse witness line {0:?}")]
    Syntax(String),
    #[error("witness must start with a `start:` line")]
    MissingStart,
}

/// A start word and a list of moves.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NullSequence {
    pub start: Word,
    pub moves: Vec<Move>,
}

impl NullSequence {
    pub fn new(start: Word, moves: Vec<Move>) -> NullSequence {
        NullSequence { start, moves }
    }

    pub fn relator_count(&self) -> usize {
        self.moves.iter().filter(|m| m.is_relator()).count()
    }

    /// `start: <word>` followed by one move per line.
    pub fn render(&self, a: &Alphabet) -> String {
        let mut out = format!("start: {}\n", a.render(&self.start));
        for m in &self.moves {
            out.push_str(&m.render(a));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, a: &Alphabet) -> Result<NullSequence, WitnessError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let first = lines.next().ok_or(WitnessError::MissingStart)?;
        let start = first.strip_prefix("start:").ok_or(WitnessError::MissingStart)?;
        let start = a.parse(start).map_err(|_| WitnessError::Syntax(first.to_string()))?;
        let moves = lines.map(|l| Move::parse(l, a)).collect::<Result<_, _>>()?;
        Ok(NullSequence { start, moves })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basepoint {
    /// Ordinary P-sequences; cyclic shifts are illegal.
    Fixed,
    /// Cyclic shifts allowed (free filling length).
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SequenceStats {
    pub relator_count: usize,
    pub max_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    /// w₀, …, w_k for the legal prefix of the moves.
    pub words: Vec<Word>,
    pub stats: SequenceStats,
    /// Index of the first illegal move, if any.
    pub first_invalid: Option<usize>,
}

impl Replay {
    pub fn valid(&self) -> bool {
        self.first_invalid.is_none()
    }

    /// Valid and ending at ε.
    pub fn is_null(&self) -> bool {
        self.valid() && self.words.last().is_some_and(Word::is_empty)
    }

    pub fn last(&self) -> &Word {
        self.words.last().expect("replay records the start word")
    }
}

/// Applies one move, or returns `None` if it is illegal.
pub fn apply_move(w: &Word, m: &Move, closure: &crate::presentation::RelatorClosure, basepoint: Basepoint) -> Option<Word> {
    let l = w.letters();
    match m {
        Move::FreeReduce { at } => {
            let at = *at;
            (at + 1 < l.len() && l[at] == l[at + 1].inverse()).then(|| {
                let mut v = l.to_vec();
                v.drain(at..at + 2);
                Word::from(v)
            })
        }
        Move::FreeExpand { at, letter } => (*at <= l.len() && letter.index() < 128).then(|| {
            let mut v = l.to_vec();
            v.splice(*at..*at, [*letter, letter.inverse()]);
            Word::from(v)
        }),
        Move::ApplyRelator { closure: c, consumed, at } => {
            let (at, k) = (*at, *consumed);
            if !closure.contains(c) || k > c.len() || at + k > l.len() || l[at..at + k] != c.letters()[..k] {
                return None;
            }
            let v = c.subword(k, c.len()).invert();
            let mut out = l.to_vec();
            out.splice(at..at + k, v.letters().iter().copied());
            Some(Word::from(out))
        }
        Move::CyclicShift { offset } => (basepoint == Basepoint::Free).then(|| w.rotate(*offset)),
    }
}

/// Replays `ns`, validating each move against the relator closure.
pub fn replay(ns: &NullSequence, p: &Presentation, basepoint: Basepoint) -> Replay {
    let closure = p.relator_closure();
    let m = p.generator_count();
    let mut words = vec![ns.start.clone()];
    let mut stats = SequenceStats { relator_count: 0, max_len: ns.start.len() };
    let mut first_invalid = (ns.start.generator_span() > m).then_some(0);
    if first_invalid.is_none() {
        for (i, mv) in ns.moves.iter().enumerate() {
            let cur = words.last().expect("non-empty");
            let legal = match mv {
                Move::FreeExpand { letter, .. } => letter.index() < m,
                _ => true,
            };
            match apply_move(cur, mv, &closure, basepoint).filter(|_| legal) {
                Some(next) => {
                    stats.max_len = stats.max_len.max(next.len());
                    stats.relator_count += mv.is_relator() as usize;
                    words.push(next);
                }
                None => {
                    first_invalid = Some(i);
                    break;
                }
            }
        }
    }
    Replay { words, stats, first_invalid }
}

/// Search limits. All fields must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SearchBudget {
    /// No intermediate word may be longer than this.
    pub max_word_len: usize,
    /// Number of distinct states a single search may store.
    pub max_states: usize,
    /// Largest relator-move count (or piece count) explored.
    pub max_cost: usize,
}

impl SearchBudget {
    pub fn new(max_word_len: usize, max_states: usize, max_cost: usize) -> SearchBudget {
        assert!(max_word_len > 0 && max_states > 0 && max_cost > 0, "budgets must be positive");
        SearchBudget { max_word_len, max_states, max_cost }
    }

    pub fn with_max_word_len(self, max_word_len: usize) -> SearchBudget {
        SearchBudget { max_word_len, ..self }
    }
}

impl Default for SearchBudget {
    fn default() -> SearchBudget {
        SearchBudget { max_word_len: 14, max_states: 4_000_000, max_cost: 64 }
    }
}

/// Which relator applications the searches generate. `replay` always accepts
/// every application.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RelatorMoves {
    /// u has at most one letter: replace a letter x by v where x·v⁻¹ is a
    /// closure word, or insert a closure word. These are exactly the moves a
    /// 2-cell collapse (or its inverse) induces on the boundary word.
    #[default]
    Cellular,
    /// Any prefix u of any closure word.
    Unrestricted,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DpsError {
    #[error("searches support at most {MAX_PACKED_GENERATORS} generators")]
    TooManyGenerators,
    #[error("searches support words of at most {MAX_PACKED_LEN} letters")]
    WordTooLong,
    #[error("word uses a generator outside the presentation")]
    AlphabetMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownReason {
    /// ε was not reached with intermediate words of length ≤ the cap.
    LengthCap,
    /// The state table filled up.
    StateCap,
    /// The cost limit was reached.
    CostCap,
}

/// A resolved search value with its witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Found {
    pub value: usize,
    pub witness: NullSequence,
    /// False when the state cap truncated the search, so the value is only an
    /// upper bound.
    pub exact: bool,
    /// The length cap the value is relative to.
    pub cap: usize,
    pub states: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchResult {
    Found(Found),
    Unknown(UnknownReason),
}

impl SearchResult {
    pub fn found(&self) -> Option<&Found> {
        match self {
            SearchResult::Found(f) => Some(f),
            SearchResult::Unknown(_) => None,
        }
    }

    pub fn value(&self) -> Option<usize> {
        self.found().map(|f| f.value)
    }

    pub fn exact_value(&self) -> Option<usize> {
        self.found().filter(|f| f.exact).map(|f| f.value)
    }
}

pub(crate) type Key = u128;

pub(crate) fn key_len(k: Key) -> usize {
    (128 - k.leading_zeros() as usize).div_ceil(4)
}

fn low_mask(bits: usize) -> Key {
    if bits >= 128 {
        !0
    } else {
        (1u128 << bits) - 1
    }
}

fn shr(k: Key, bits: usize) -> Key {
    k.checked_shr(bits as u32).unwrap_or(0)
}

fn shl(k: Key, bits: usize) -> Key {
    k.checked_shl(bits as u32).unwrap_or(0)
}

pub(crate) fn pack(letters: &[Letter]) -> Key {
    letters
        .iter()
        .enumerate()
        .fold(0, |k, (i, l)| k | ((l.code() as u128 + 1) << (4 * i)))
}

pub(crate) fn unpack(mut k: Key) -> Word {
    let mut v = Vec::new();
    while k != 0 {
        v.push(Letter::from_code((k & 15) as u8 - 1));
        k >>= 4;
    }
    Word::from(v)
}

fn nibble(k: Key, i: usize) -> u8 {
    (shr(k, 4 * i) & 15) as u8
}

/// Replaces `remove` letters at position `at` by the packed word `insert`.
fn splice(k: Key, at: usize, remove: usize, insert: Key, insert_len: usize) -> Key {
    (k & low_mask(4 * at)) | shl(insert, 4 * at) | shl(shr(k, 4 * (at + remove)), 4 * (at + insert_len))
}

#[derive(Debug, Clone)]
struct Rule {
    from: Key,
    from_len: usize,
    to: Key,
    to_len: usize,
    closure: usize,
    consumed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Start,
    Reduce(u8),
    Expand(u8, u8),
    Rule(u32, u8),
    Shift,
}

/// Move tables for one presentation.
#[derive(Debug, Clone)]
pub struct Dps {
    presentation: Presentation,
    closures: Vec<Word>,
    letters: usize,
    forward: RuleSet,
    backward: RuleSet,
}

#[derive(Debug, Clone, Default)]
struct RuleSet {
    rules: Vec<Rule>,
    /// Rules with a non-empty left side, indexed by its first letter code.
    by_first: Vec<Vec<u32>>,
    /// Rules with an empty left side (pure insertions).
    insertions: Vec<u32>,
}

impl RuleSet {
    fn new(rules: Vec<Rule>, letters: usize) -> RuleSet {
        let mut by_first = vec![Vec::new(); letters];
        let mut insertions = Vec::new();
        for (i, r) in rules.iter().enumerate() {
            if r.from_len == 0 {
                insertions.push(i as u32);
            } else {
                by_first[(r.from & 15) as usize - 1].push(i as u32);
            }
        }
        RuleSet { rules, by_first, insertions }
    }
}

impl Dps {
    pub fn new(p: &Presentation, moves: RelatorMoves) -> Result<Dps, DpsError> {
        if p.generator_count() > MAX_PACKED_GENERATORS {
            return Err(DpsError::TooManyGenerators);
        }
        let closures: Vec<Word> = p.relator_closure().words.into_iter().collect();
        let mut rules = Vec::new();
        for (ci, c) in closures.iter().enumerate() {
            if c.len() > MAX_PACKED_LEN {
                return Err(DpsError::WordTooLong);
            }
            let splits: Vec<usize> = match moves {
                RelatorMoves::Cellular => vec![0, 1],
                RelatorMoves::Unrestricted => (0..=c.len()).collect(),
            };
            for k in splits {
                let u = c.subword(0, k);
                let v = c.subword(k, c.len()).invert();
                rules.push(Rule {
                    from: pack(u.letters()),
                    from_len: u.len(),
                    to: pack(v.letters()),
                    to_len: v.len(),
                    closure: ci,
                    consumed: k,
                });
            }
        }
        let letters = 2 * p.generator_count();
        let reversed = rules
            .iter()
            .map(|r| Rule { from: r.to, from_len: r.to_len, to: r.from, to_len: r.from_len, ..r.clone() })
            .collect();
        Ok(Dps {
            presentation: p.clone(),
            closures,
            letters,
            forward: RuleSet::new(rules, letters),
            backward: RuleSet::new(reversed, letters),
        })
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    fn check_word(&self, w: &Word) -> Result<Key, DpsError> {
        if w.generator_span() > self.presentation.generator_count() {
            return Err(DpsError::AlphabetMismatch);
        }
        if w.len() > MAX_PACKED_LEN {
            return Err(DpsError::WordTooLong);
        }
        Ok(pack(w.letters()))
    }

    /// Calls `f(next, step, cost)` for every neighbour of length ≤ `cap`.
    fn neighbours(&self, k: Key, cap: usize, rules: &RuleSet, shifts: bool, mut f: impl FnMut(Key, Step, usize)) {
        let n = key_len(k);
        for i in 0..n.saturating_sub(1) {
            let x = nibble(k, i);
            let y = nibble(k, i + 1);
            if (x - 1) ^ 1 == y - 1 {
                f(splice(k, i, 2, 0, 0), Step::Reduce(i as u8), 0);
            }
        }
        if n + 2 <= cap {
            for i in 0..=n {
                for c in 0..self.letters as u8 {
                    let pair = (c as u128 + 1) | (((c ^ 1) as u128 + 1) << 4);
                    f(splice(k, i, 0, pair, 2), Step::Expand(i as u8, c), 0);
                }
            }
        }
        for i in 0..n {
            let first = nibble(k, i) as usize - 1;
            for &ri in &rules.by_first[first] {
                let r = &rules.rules[ri as usize];
                if i + r.from_len > n || n - r.from_len + r.to_len > cap {
                    continue;
                }
                if shr(k, 4 * i) & low_mask(4 * r.from_len) == r.from {
                    f(splice(k, i, r.from_len, r.to, r.to_len), Step::Rule(ri, i as u8), 1);
                }
            }
        }
        for &ri in &rules.insertions {
            let r = &rules.rules[ri as usize];
            if n + r.to_len > cap {
                continue;
            }
            for i in 0..=n {
                f(splice(k, i, 0, r.to, r.to_len), Step::Rule(ri, i as u8), 1);
            }
        }
        if shifts && n > 1 {
            let rotated = (k >> 4) | ((k & 15) << (4 * (n - 1)));
            if rotated != k {
                f(rotated, Step::Shift, 0);
            }
        }
    }

    /// The move a forward search step denotes.
    fn forward_move(&self, step: Step) -> Move {
        match step {
            Step::Start => unreachable!("the start state has no incoming move"),
            Step::Reduce(i) => Move::FreeReduce { at: i as usize },
            Step::Expand(i, c) => Move::FreeExpand { at: i as usize, letter: Letter::from_code(c) },
            Step::Rule(ri, i) => {
                let r = &self.forward.rules[ri as usize];
                Move::ApplyRelator { closure: self.closures[r.closure].clone(), consumed: r.consumed, at: i as usize }
            }
            Step::Shift => Move::CyclicShift { offset: 1 },
        }
    }

    /// The forward move from `child` to `parent` when `step` is a backward
    /// search step that produced `child` from `parent`.
    fn backward_move(&self, step: Step, parent: Key) -> Move {
        match step {
            Step::Start => unreachable!("the start state has no incoming move"),
            Step::Reduce(i) => {
                let letter = Letter::from_code(nibble(parent, i as usize) - 1);
                Move::FreeExpand { at: i as usize, letter }
            }
            Step::Expand(i, _) => Move::FreeReduce { at: i as usize },
            Step::Rule(ri, i) => {
                let r = &self.backward.rules[ri as usize];
                Move::ApplyRelator { closure: self.closures[r.closure].clone(), consumed: r.consumed, at: i as usize }
            }
            Step::Shift => Move::CyclicShift { offset: key_len(parent) - 1 },
        }
    }

    fn trace_forward(&self, start: Key, parents: &FxHashMap<Key, (Key, Step)>) -> NullSequence {
        let mut moves = Vec::new();
        let mut cur: Key = 0;
        while cur != start {
            let (parent, step) = parents[&cur];
            moves.push(self.forward_move(step));
            cur = parent;
        }
        moves.reverse();
        NullSequence::new(unpack(start), moves)
    }

    /// Exact Area(w) among sequences whose words have length ≤ the cap:
    /// 0-1 shortest path with free moves costing 0 and relator moves 1.
    pub fn area(&self, w: &Word, b: &SearchBudget) -> Result<SearchResult, DpsError> {
        let start = self.check_word(w)?;
        let cap = b.max_word_len.max(w.len()).min(MAX_PACKED_LEN);
        let mut best: FxHashMap<Key, (u32, Key, Step)> = FxHashMap::default();
        best.insert(start, (0, start, Step::Start));
        let mut deque: VecDeque<(Key, u32)> = VecDeque::from([(start, 0)]);
        let mut truncated = false;
        let mut cost_capped = false;
        while let Some((k, d)) = deque.pop_front() {
            if best[&k].0 < d {
                continue;
            }
            if k == 0 {
                let parents: FxHashMap<Key, (Key, Step)> = best.iter().map(|(&s, &(_, p, st))| (s, (p, st))).collect();
                return Ok(SearchResult::Found(Found {
                    value: d as usize,
                    witness: self.trace_forward(start, &parents),
                    exact: !truncated,
                    cap,
                    states: best.len(),
                }));
            }
            self.neighbours(k, cap, &self.forward, false, |next, step, cost| {
                let nd = d + cost as u32;
                if nd as usize > b.max_cost {
                    cost_capped = true;
                    return;
                }
                let full = best.len() >= b.max_states;
                match best.get_mut(&next) {
                    Some(e) if e.0 <= nd => return,
                    Some(e) => *e = (nd, k, step),
                    None if full => {
                        truncated = true;
                        return;
                    }
                    None => {
                        best.insert(next, (nd, k, step));
                    }
                }
                if cost == 0 {
                    deque.push_front((next, nd));
                } else {
                    deque.push_back((next, nd));
                }
            });
        }
        Ok(SearchResult::Unknown(if truncated {
            UnknownReason::StateCap
        } else if cost_capped {
            UnknownReason::CostCap
        } else {
            UnknownReason::LengthCap
        }))
    }

    /// Breadth-first reachability of ε from `w` through words of length ≤ `cap`.
    pub fn reach(&self, w: &Word, cap: usize, max_states: usize, basepoint: Basepoint) -> Result<Reach, DpsError> {
        let start = self.check_word(w)?;
        if w.len() > cap {
            return Ok(Reach { witness: None, truncated: false, states: 0 });
        }
        let cap = cap.min(MAX_PACKED_LEN);
        let shifts = basepoint == Basepoint::Free;
        let mut parents: FxHashMap<Key, (Key, Step)> = FxHashMap::default();
        parents.insert(start, (start, Step::Start));
        let mut queue = VecDeque::from([start]);
        let mut truncated = false;
        while let Some(k) = queue.pop_front() {
            if k == 0 {
                return Ok(Reach { witness: Some(self.trace_forward(start, &parents)), truncated, states: parents.len() });
            }
            let mut found = false;
            self.neighbours(k, cap, &self.forward, shifts, |next, step, _| {
                if found || parents.contains_key(&next) {
                    return;
                }
                if parents.len() >= max_states {
                    truncated = true;
                    return;
                }
                parents.insert(next, (k, step));
                if next == 0 {
                    found = true;
                }
                queue.push_back(next);
            });
            if found {
                return Ok(Reach { witness: Some(self.trace_forward(start, &parents)), truncated, states: parents.len() });
            }
        }
        Ok(Reach { witness: None, truncated, states: parents.len() })
    }

    /// Smallest L such that ε is reachable through words of length ≤ L,
    /// by binary search over L.
    fn min_max_len(&self, w: &Word, b: &SearchBudget, basepoint: Basepoint) -> Result<SearchResult, DpsError> {
        self.check_word(w)?;
        let cap = b.max_word_len.max(w.len()).min(MAX_PACKED_LEN);
        let top = self.reach(w, cap, b.max_states, basepoint)?;
        let mut states = top.states;
        let Some(mut witness) = top.witness else {
            return Ok(SearchResult::Unknown(if top.truncated { UnknownReason::StateCap } else { UnknownReason::LengthCap }));
        };
        // A truncated run can only miss witnesses, so a failed probe below a
        // truncated run leaves the answer an upper bound.
        let mut exact = true;
        let (mut lo, mut hi) = (w.len(), cap);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let probe = self.reach(w, mid, b.max_states, basepoint)?;
            states = states.max(probe.states);
            match probe.witness {
                Some(s) => {
                    hi = mid;
                    witness = s;
                }
                None => {
                    exact &= !probe.truncated;
                    lo = mid + 1;
                }
            }
        }
        let value = replay(&witness, &self.presentation, basepoint).stats.max_len;
        debug_assert_eq!(value, hi);
        Ok(SearchResult::Found(Found { value, witness, exact, cap, states }))
    }

    pub fn fl(&self, w: &Word, b: &SearchBudget) -> Result<SearchResult, DpsError> {
        self.min_max_len(w, b, Basepoint::Fixed)
    }

    pub fn ffl(&self, w: &Word, b: &SearchBudget) -> Result<SearchResult, DpsError> {
        self.min_max_len(w, b, Basepoint::Free)
    }

    /// Explores every word reachable from ε (hence every null-homotopic word
    /// whose filling fits under `cap`) and records Area and FL for each.
    pub fn sweep(&self, cap: usize, max_states: usize, basepoint: Basepoint) -> NullSweep {
        let cap = cap.min(MAX_PACKED_LEN);
        let shifts = basepoint == Basepoint::Free;
        let mut truncated = false;

        let mut area: FxHashMap<Key, (u32, Key, Step)> = FxHashMap::default();
        area.insert(0, (0, 0, Step::Start));
        let mut deque: VecDeque<(Key, u32)> = VecDeque::from([(0, 0)]);
        while let Some((k, d)) = deque.pop_front() {
            if area[&k].0 < d {
                continue;
            }
            self.neighbours(k, cap, &self.backward, shifts, |next, step, cost| {
                let nd = d + cost as u32;
                let full = area.len() >= max_states;
                match area.get_mut(&next) {
                    Some(e) if e.0 <= nd => return,
                    Some(e) => *e = (nd, k, step),
                    None if full => {
                        truncated = true;
                        return;
                    }
                    None => {
                        area.insert(next, (nd, k, step));
                    }
                }
                if cost == 0 {
                    deque.push_front((next, nd));
                } else {
                    deque.push_back((next, nd));
                }
            });
        }

        let mut fl: FxHashMap<Key, (u8, Key, Step)> = FxHashMap::default();
        fl.insert(0, (0, 0, Step::Start));
        let mut buckets: Vec<Vec<Key>> = vec![Vec::new(); cap + 1];
        buckets[0].push(0);
        for level in 0..=cap {
            while let Some(k) = buckets[level].pop() {
                if fl[&k].0 as usize != level {
                    continue;
                }
                self.neighbours(k, cap, &self.backward, shifts, |next, step, _| {
                    let nv = level.max(key_len(next)) as u8;
                    let full = fl.len() >= max_states;
                    match fl.get_mut(&next) {
                        Some(e) if e.0 <= nv => return,
                        Some(e) => *e = (nv, k, step),
                        None if full => {
                            truncated = true;
                            return;
                        }
                        None => {
                            fl.insert(next, (nv, k, step));
                        }
                    }
                    buckets[nv as usize].push(next);
                });
            }
        }
        NullSweep { dps: self.clone(), cap, basepoint, truncated, area, fl }
    }
}

/// Outcome of a reachability run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reach {
    pub witness: Option<NullSequence>,
    /// The state cap was hit, so a missing witness proves nothing.
    pub truncated: bool,
    pub states: usize,
}

/// Area and FL (or FFL) of every word reachable from ε under a length cap.
#[derive(Debug, Clone)]
pub struct NullSweep {
    dps: Dps,
    cap: usize,
    basepoint: Basepoint,
    truncated: bool,
    area: FxHashMap<Key, (u32, Key, Step)>,
    fl: FxHashMap<Key, (u8, Key, Step)>,
}

impl NullSweep {
    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn basepoint(&self) -> Basepoint {
        self.basepoint
    }

    /// True if the state cap cut the sweep short; values are then upper bounds.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn states(&self) -> usize {
        self.area.len()
    }

    fn trace<T: Copy>(&self, w: &Word, map: &FxHashMap<Key, (T, Key, Step)>) -> Option<NullSequence> {
        if w.len() > MAX_PACKED_LEN {
            return None;
        }
        let start = pack(w.letters());
        map.get(&start)?;
        let mut moves = Vec::new();
        let mut cur = start;
        while cur != 0 {
            let (_, parent, step) = map[&cur];
            moves.push(self.dps.backward_move(step, parent));
            cur = parent;
        }
        Some(NullSequence::new(w.clone(), moves))
    }

    fn found(&self, value: usize, witness: NullSequence) -> Found {
        Found { value, witness, exact: !self.truncated, cap: self.cap, states: self.area.len() }
    }

    /// Area(w) relative to the cap, with a witness; `None` if w was not reached.
    pub fn area(&self, w: &Word) -> Option<Found> {
        let (d, _, _) = self.area.get(&pack(w.letters())).filter(|_| w.len() <= MAX_PACKED_LEN)?;
        Some(self.found(*d as usize, self.trace(w, &self.area)?))
    }

    /// FL(w) (or FFL(w) for a free-basepoint sweep), with a witness.
    pub fn fl(&self, w: &Word) -> Option<Found> {
        let (v, _, _) = self.fl.get(&pack(w.letters())).filter(|_| w.len() <= MAX_PACKED_LEN)?;
        Some(self.found(*v as usize, self.trace(w, &self.fl)?))
    }

    pub fn contains(&self, w: &Word) -> bool {
        w.len() <= MAX_PACKED_LEN && self.area.contains_key(&pack(w.letters()))
    }
}

/// Area(w) with cellular relator moves.
pub fn area_search(w: &Word, p: &Presentation, b: &SearchBudget) -> Result<SearchResult, DpsError> {
    Dps::new(p, RelatorMoves::Cellular)?.area(w, b)
}

/// FL(w) with cellular relator moves.
pub fn fl_search(w: &Word, p: &Presentation, b: &SearchBudget) -> Result<SearchResult, DpsError> {
    Dps::new(p, RelatorMoves::Cellular)?.fl(w, b)
}

/// FFL(w): FL with cyclic shifts allowed.
pub fn ffl_search(w: &Word, p: &Presentation, b: &SearchBudget) -> Result<SearchResult, DpsError> {
    Dps::new(p, RelatorMoves::Cellular)?.ffl(w, b)
}

/// A null-sequence for `w` if ε is reachable within the budget.
pub fn prove_trivial(w: &Word, p: &Presentation, b: &SearchBudget) -> Option<NullSequence> {
    let dps = Dps::new(p, RelatorMoves::Cellular).ok()?;
    let cap = b.max_word_len.max(w.len());
    dps.reach(w, cap, b.max_states, Basepoint::Fixed).ok()?.witness
}

/// One step of a coarse filling: a free move, or deletion of an
/// oracle-trivial subword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoarseMove {
    Free(Move),
    Delete { at: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseFilling {
    pub pieces: usize,
    pub start: Word,
    pub moves: Vec<CoarseMove>,
    /// Longest deletable piece: ⌊λℓ(w)⌋ + L.
    pub piece_bound: usize,
}

impl CoarseFilling {
    /// Re-applies the moves, checking each deleted piece with the oracle.
    pub fn verify(&self, o: &WordOracle) -> bool {
        let mut cur = self.start.clone();
        let mut pieces = 0;
        for m in &self.moves {
            cur = match m {
                CoarseMove::Free(mv) => {
                    match apply_move(&cur, mv, &o.presentation().relator_closure(), Basepoint::Fixed) {
                        Some(next) if !mv.is_relator() => next,
                        _ => return false,
                    }
                }
                CoarseMove::Delete { at, len } => {
                    if at + len > cur.len() || *len == 0 || *len > self.piece_bound {
                        return false;
                    }
                    if o.is_trivial(&cur.subword(*at, at + len)) != Ok(Triviality::Trivial) {
                        return false;
                    }
                    pieces += 1;
                    let mut v = cur.letters().to_vec();
                    v.drain(*at..at + len);
                    Word::from(v)
                }
            };
        }
        cur.is_empty() && pieces == self.pieces
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoarseError {
    #[error(transparent)]
    Dps(#[from] DpsError),
    #[error("oracle could not decide a piece")]
    OracleIndecisive,
    #[error("λ must lie strictly between 0 and 1")]
    BadLambda,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoarseResult {
    Filled(CoarseFilling),
    /// No filling with at most K pieces within the budget.
    Infeasible,
}

/// Minimal number of pieces w = ∏ uᵢwᵢuᵢ⁻¹ with ℓ(wᵢ) ≤ λℓ(w) + L, searched
/// as free moves plus deletions of oracle-trivial subwords of that length
/// (cost 1 each), up to `k` pieces.
pub fn coarse_fill(
    w: &Word,
    o: &WordOracle,
    lambda: num_rational::Rational64,
    l: usize,
    k: usize,
    b: &SearchBudget,
) -> Result<CoarseResult, CoarseError> {
    use num_traits::{One, Zero};
    if lambda <= num_rational::Rational64::zero() || lambda >= num_rational::Rational64::one() {
        return Err(CoarseError::BadLambda);
    }
    let p = o.presentation();
    let dps = Dps::new(p, RelatorMoves::Cellular)?;
    let start = dps.check_word(w)?;
    let bound = (lambda * num_rational::Rational64::from_integer(w.len() as i64)).floor().to_integer() as usize + l;
    let cap = b.max_word_len.max(w.len()).min(MAX_PACKED_LEN);
    let no_rules = RuleSet::new(Vec::new(), dps.letters);

    let mut trivial_cache: FxHashMap<Key, bool> = FxHashMap::default();
    let mut is_trivial = |piece: Key| -> Result<bool, CoarseError> {
        if let Some(&t) = trivial_cache.get(&piece) {
            return Ok(t);
        }
        let word = unpack(piece);
        let t = match o.element_key(&word) {
            Some(key) => Some(key == o.element_key(&Word::empty()).expect("keyed")),
            None => match o.is_trivial(&word) {
                Ok(Triviality::Trivial) => Some(true),
                Ok(Triviality::Nontrivial) => Some(false),
                _ => None,
            },
        };
        let t = t.ok_or(CoarseError::OracleIndecisive)?;
        trivial_cache.insert(piece, t);
        Ok(t)
    };

    #[derive(Clone, Copy)]
    enum CStep {
        Start,
        Free(Step),
        Delete(u8, u8),
    }
    let mut best: FxHashMap<Key, (u32, Key, CStep)> = FxHashMap::default();
    best.insert(start, (0, start, CStep::Start));
    let mut deque = VecDeque::from([(start, 0u32)]);
    while let Some((key, d)) = deque.pop_front() {
        if best[&key].0 < d {
            continue;
        }
        if key == 0 {
            let mut moves = Vec::new();
            let mut cur = 0;
            while cur != start {
                let (_, parent, step) = best[&cur];
                moves.push(match step {
                    CStep::Free(s) => CoarseMove::Free(dps.forward_move(s)),
                    CStep::Delete(at, len) => CoarseMove::Delete { at: at as usize, len: len as usize },
                    CStep::Start => unreachable!(),
                });
                cur = parent;
            }
            moves.reverse();
            return Ok(CoarseResult::Filled(CoarseFilling { pieces: d as usize, start: w.clone(), moves, piece_bound: bound }));
        }
        let mut next_states: Vec<(Key, CStep, u32)> = Vec::new();
        dps.neighbours(key, cap, &no_rules, false, |next, step, _| next_states.push((next, CStep::Free(step), 0)));
        if (d as usize) < k.min(b.max_cost) {
            let n = key_len(key);
            for at in 0..n {
                for len in 1..=bound.min(n - at) {
                    let piece = shr(key, 4 * at) & low_mask(4 * len);
                    if is_trivial(piece)? {
                        next_states.push((splice(key, at, len, 0, 0), CStep::Delete(at as u8, len as u8), 1));
                    }
                }
            }
        }
        for (next, step, cost) in next_states {
            let nd = d + cost;
            match best.get(&next) {
                Some(e) if e.0 <= nd => continue,
                None if best.len() >= b.max_states => continue,
                _ => {}
            }
            best.insert(next, (nd, key, step));
            if cost == 0 {
                deque.push_front((next, nd));
            } else {
                deque.push_back((next, nd));
            }
        }
    }
    Ok(CoarseResult::Infeasible)
}

impl fmt::Display for SearchResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchResult::Found(x) if x.exact => write!(f, "{} (exact)", x.value),
            SearchResult::Found(x) => write!(f, "{} (upper bound)", x.value),
            SearchResult::Unknown(r) => write!(f, "Unknown ({r:?})"),
        }
    }
}
