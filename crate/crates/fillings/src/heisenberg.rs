//! Fillings in the Heisenberg group H₃ = ⟨x, y, z | [x,y]z⁻¹, [x,z], [y,z]⟩
//! with linear length: the compression words u(s) = z^s, the sequence that
//! compresses z^s into u(s), and a filling procedure that keeps every
//! emitted power of z compressed.

use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use thiserror::Error;

use crate::dps::{apply_move, Basepoint, Move, NullSequence};
use crate::presentation::{Presentation, RelatorClosure, Unitriangular};
use crate::words::{Letter, Word};

const X: Letter = Letter::gen(0);
const Y: Letter = Letter::gen(1);
const Z: Letter = Letter::gen(2);

/// Largest s accepted by `compress_sequence`, as a multiple of n².
pub const K1: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum H3Error {
    #[error("s = {s} is outside 0..={max}")]
    OutOfRange { s: usize, max: usize },
    #[error("n must be positive")]
    ZeroScale,
    #[error("word is not null-homotopic in H3")]
    NotNullHomotopic,
    #[error("word uses letters outside x, y, z")]
    Alphabet,
}

fn h3() -> &'static (Presentation, RelatorClosure) {
    static H3: OnceLock<(Presentation, RelatorClosure)> = OnceLock::new();
    H3.get_or_init(|| {
        let p = Presentation::preset("h3").expect("catalog presentation");
        let c = p.relator_closure();
        (p, c)
    })
}

/// s = s₀ + s₁·n + B·n² with the pieces of u(s).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressionParams {
    pub n: usize,
    pub s: usize,
    pub s0: usize,
    pub s1: usize,
    /// s mod n², the part written as z^{s₀}[x^n, y^{s₁}].
    pub a: usize,
    /// Number of trailing copies of u(n²) = [x^n, y^n].
    pub b: usize,
}

impl CompressionParams {
    pub fn new(s: usize, n: usize) -> CompressionParams {
        assert!(n > 0, "n must be positive");
        let (a, b) = (s % (n * n), s / (n * n));
        CompressionParams { n, s, s0: a % n, s1: a / n, a, b }
    }
}

/// [x^n, y^k], or ε when k = 0.
fn commutator(n: usize, k: usize) -> Word {
    if k == 0 {
        return Word::empty();
    }
    let xn = Word::letter(X).pow(n as i64);
    let yk = Word::letter(Y).pow(k as i64);
    Word::commutator(&xn, &yk)
}

/// u(s): z^{s₀}[x^n, y^{s₁}] for s < n², [x^n, y^n] for s = n², and
/// u(A)·u(n²)^B for s = A + B·n². Represents z^s.
pub fn compression_word(s: usize, n: usize) -> Word {
    let c = CompressionParams::new(s, n);
    let head = Word::letter(Z).pow(c.s0 as i64).concat(&commutator(n, c.s1));
    head.concat(&commutator(n, n).pow(c.b as i64))
}

/// Moves turning the two-letter word p·q into q·p with the correcting power
/// of z: q p z when pq = qpz, Z q p when pq = qpz⁻¹, q p when they commute.
/// Found once per pair by breadth-first search over words of length ≤ 5.
fn swap_macro(p: Letter, q: Letter) -> &'static [Move] {
    static MACROS: OnceLock<HashMap<(Letter, Letter), Vec<Move>>> = OnceLock::new();
    let table = MACROS.get_or_init(|| {
        let letters: Vec<Letter> = (0..6).map(Letter::from_code).collect();
        let mut out = HashMap::new();
        for &p in &letters {
            for &q in &letters {
                if p.index() != q.index() {
                    out.insert((p, q), search_swap(p, q));
                }
            }
        }
        out
    });
    &table[&(p, q)]
}

fn swap_target(p: Letter, q: Letter) -> Word {
    let pq = Unitriangular::eval(&Word::from(vec![p, q]));
    let qp = Unitriangular::eval(&Word::from(vec![q, p]));
    match pq.c - qp.c {
        0 => Word::from(vec![q, p]),
        1 => Word::from(vec![q, p, Z]),
        -1 => Word::from(vec![Z.inverse(), q, p]),
        _ => unreachable!("single letters differ by at most one central letter"),
    }
}

fn search_swap(p: Letter, q: Letter) -> Vec<Move> {
    const CAP: usize = 5;
    let (_, closure) = h3();
    let start = Word::from(vec![p, q]);
    let target = swap_target(p, q);
    let mut parent: HashMap<Word, Option<(Word, Move)>> = HashMap::from([(start.clone(), None)]);
    let mut queue = VecDeque::from([start]);
    while let Some(w) = queue.pop_front() {
        if w == target {
            let mut moves = Vec::new();
            let mut cur = w;
            while let Some(Some((prev, m))) = parent.get(&cur).cloned() {
                moves.push(m);
                cur = prev;
            }
            moves.reverse();
            return moves;
        }
        let mut candidates = Vec::new();
        for at in 0..=w.len() {
            candidates.push(Move::FreeReduce { at });
            for code in 0..6 {
                candidates.push(Move::FreeExpand { at, letter: Letter::from_code(code) });
            }
            for c in closure.iter() {
                for consumed in 1..=c.len().min(w.len() - at) {
                    candidates.push(Move::ApplyRelator { closure: c.clone(), consumed, at });
                }
            }
        }
        for m in candidates {
            let Some(next) = apply_move(&w, &m, closure, Basepoint::Fixed) else { continue };
            if next.len() <= CAP && !parent.contains_key(&next) {
                parent.insert(next.clone(), Some((w.clone(), m)));
                queue.push_back(next);
            }
        }
    }
    unreachable!("every adjacent swap has a short derivation in H3")
}

/// A word under construction together with the moves that produced it; each
/// move is checked as it is recorded.
struct Tape {
    word: Vec<Letter>,
    moves: Vec<Move>,
}

impl Tape {
    fn new(start: &Word) -> Tape {
        Tape { word: start.letters().to_vec(), moves: Vec::new() }
    }

    fn push(&mut self, m: Move) {
        let (_, closure) = h3();
        let next = apply_move(&Word::from(self.word.clone()), &m, closure, Basepoint::Fixed).expect("constructed move is legal");
        self.word = next.into_letters();
        self.moves.push(m);
    }

    fn push_at(&mut self, offset: usize, moves: &[Move]) {
        for m in moves {
            self.push(shift(m, offset));
        }
    }

    /// Swaps positions i and i+1, which must hold different generators.
    fn swap(&mut self, i: usize) {
        let (p, q) = (self.word[i], self.word[i + 1]);
        self.push_at(i, swap_macro(p, q));
    }
}

fn shift(m: &Move, offset: usize) -> Move {
    match m {
        Move::FreeReduce { at } => Move::FreeReduce { at: at + offset },
        Move::FreeExpand { at, letter } => Move::FreeExpand { at: at + offset, letter: *letter },
        Move::ApplyRelator { closure, consumed, at } => {
            Move::ApplyRelator { closure: closure.clone(), consumed: *consumed, at: at + offset }
        }
        Move::CyclicShift { .. } => unreachable!("fixed-basepoint construction"),
    }
}

/// The same derivation read on inverse words: moves taking W⁻¹ to V⁻¹ when
/// `moves` take W (of length `len`) to V.
fn mirror(moves: &[Move], mut len: usize) -> Vec<Move> {
    let mut out = Vec::with_capacity(moves.len());
    for m in moves {
        match m {
            Move::FreeReduce { at } => {
                out.push(Move::FreeReduce { at: len - 2 - at });
                len -= 2;
            }
            Move::FreeExpand { at, letter } => {
                out.push(Move::FreeExpand { at: len - at, letter: *letter });
                len += 2;
            }
            Move::ApplyRelator { closure, consumed, at } => {
                let u = closure.subword(0, *consumed);
                let rest = closure.subword(*consumed, closure.len());
                out.push(Move::ApplyRelator { closure: u.invert().concat(&rest.invert()), consumed: *consumed, at: len - at - consumed });
                len = len - consumed + rest.len();
            }
            Move::CyclicShift { .. } => unreachable!("fixed-basepoint construction"),
        }
    }
    out
}

/// Moves taking z·u(j) to u(j+1) (as standalone words). Only the leading
/// z^{s₀}[x^n, y^{s₁}] part of u(j) is touched.
fn compress_step(n: usize, j: usize) -> Vec<Move> {
    let c = CompressionParams::new(j, n);
    if c.s0 + 1 < n {
        return Vec::new();
    }
    // z^n [x^n, y^k] → [x^n, y^{k+1}]: open a y·y⁻¹ pair after y^k and pass
    // the y⁻¹ rightward through x^{-n}; each pass emits a z⁻¹ that travels
    // left and cancels one of the z's.
    let k = c.s1;
    let mut tape = Tape::new(&Word::letter(Z).pow(n as i64).concat(&commutator(n, k)));
    if k == 0 {
        for i in 0..n {
            tape.push(Move::FreeExpand { at: n + i, letter: X });
        }
    }
    let mut zs = n;
    let mut yi = zs + n + k;
    tape.push(Move::FreeExpand { at: yi, letter: Y });
    yi += 1;
    for _ in 0..n {
        debug_assert_eq!(tape.word[yi], Y.inverse());
        tape.swap(yi);
        // Now Z X Y at yi.
        let mut zi = yi;
        while zi > zs {
            tape.swap(zi - 1);
            zi -= 1;
        }
        tape.push(Move::FreeReduce { at: zs - 1 });
        zs -= 1;
        // Two letters left of the y⁻¹ were deleted and one x⁻¹ passed it, so
        // it is back at index yi.
    }
    debug_assert_eq!(Word::from(tape.word.clone()), compression_word(j + 1, n).subword(0, tape.word.len()));
    tape.moves
}

/// A P-sequence from z^s to u(s): absorbs one z at a time into the
/// compression word, z^{s-j}·u(j) → z^{s-j-1}·u(j+1).
pub fn compress_sequence(s: usize, n: usize) -> Result<NullSequence, H3Error> {
    if n == 0 {
        return Err(H3Error::ZeroScale);
    }
    let max = K1 * n * n;
    if s > max {
        return Err(H3Error::OutOfRange { s, max });
    }
    let start = Word::letter(Z).pow(s as i64);
    let mut tape = Tape::new(&start);
    for j in 0..s {
        tape.push_at(s - j - 1, &compress_step(n, j));
    }
    debug_assert_eq!(Word::from(tape.word), compression_word(s, n));
    Ok(NullSequence::new(start, tape.moves))
}

/// A null-sequence for a word w that is trivial in H₃. The z-letters are
/// carried to the ends (z rightward, z⁻¹ leftward) and absorbed into the
/// blocks u(q)⁻¹ and u(p); the remaining word over x, y is sorted, each swap
/// of a y-letter past an x-letter emitting one z^{±1} that is carried and
/// absorbed the same way. Finally u(q)⁻¹u(p) cancels freely (p = q).
pub fn h3_fill(w: &Word) -> Result<NullSequence, H3Error> {
    let (_, closure) = h3();
    if w.generator_span() > 3 {
        return Err(H3Error::Alphabet);
    }
    if Unitriangular::eval(w) != Unitriangular::IDENTITY {
        return Err(H3Error::NotNullHomotopic);
    }
    if w.is_empty() {
        return Ok(NullSequence::new(w.clone(), Vec::new()));
    }
    if closure.contains(w) {
        return Ok(NullSequence::new(w.clone(), vec![Move::ApplyRelator { closure: w.clone(), consumed: w.len(), at: 0 }]));
    }
    let n = w.len().div_ceil(2).max(2);
    let mut f = Filler { tape: Tape::new(w), n, left: 0, right: 0, lo: 0, hi: w.len() };

    // Original z-letters.
    while let Some(i) = (f.lo..f.hi).find(|&i| f.tape.word[i].index() == 2) {
        f.carry(i);
    }
    // Sort x-letters before y-letters, cancelling as we go.
    loop {
        let mid = &f.tape.word[f.lo..f.hi];
        if let Some(i) = (0..mid.len().saturating_sub(1)).find(|&i| mid[i] == mid[i + 1].inverse()) {
            f.tape.push(Move::FreeReduce { at: f.lo + i });
            f.hi -= 2;
            continue;
        }
        let Some(i) = (0..mid.len().saturating_sub(1)).find(|&i| mid[i].index() == 1 && mid[i + 1].index() == 0) else {
            break;
        };
        let at = f.lo + i;
        let before = f.tape.word.len();
        f.tape.swap(at);
        if f.tape.word.len() > before {
            f.hi += 1;
            let zi = if f.tape.word[at].index() == 2 { at } else { at + 2 };
            f.carry(zi);
        }
    }
    assert_eq!(f.lo, f.hi, "the x, y part of a null word sorts to ε");
    assert_eq!(f.left, f.right, "the two compression blocks agree");
    let half = f.tape.word.len() / 2;
    for _ in 0..half {
        f.tape.push(Move::FreeReduce { at: f.tape.word.len() / 2 - 1 });
    }
    debug_assert!(f.tape.word.is_empty());
    Ok(NullSequence::new(w.clone(), f.tape.moves))
}

/// The word is u(left)⁻¹ · word[lo..hi] · u(right).
struct Filler {
    tape: Tape,
    n: usize,
    left: usize,
    right: usize,
    lo: usize,
    hi: usize,
}

impl Filler {
    /// Moves the z^{±1} at position i (inside lo..hi) to its block and absorbs
    /// it, or cancels it against an inverse met on the way.
    fn carry(&mut self, mut i: usize) {
        let l = self.tape.word[i];
        if l == Z {
            while i + 1 < self.hi {
                if self.tape.word[i + 1] == Z.inverse() {
                    self.tape.push(Move::FreeReduce { at: i });
                    self.hi -= 2;
                    return;
                }
                self.tape.swap(i);
                i += 1;
            }
            // z · u(right) → u(right+1).
            self.tape.push_at(i, &compress_step(self.n, self.right));
            self.right += 1;
            self.hi -= 1;
        } else {
            while i > self.lo {
                if self.tape.word[i - 1] == Z {
                    self.tape.push(Move::FreeReduce { at: i - 1 });
                    self.hi -= 2;
                    return;
                }
                self.tape.swap(i - 1);
                i -= 1;
            }
            // u(left)⁻¹ · z⁻¹ = (z · u(left))⁻¹ → u(left+1)⁻¹.
            let active_len = compression_word(self.left % (self.n * self.n), self.n).len();
            let step = mirror(&compress_step(self.n, self.left), 1 + active_len);
            let old = self.tape.word.len();
            self.tape.push_at(self.lo - active_len, &step);
            self.left += 1;
            self.lo = compression_word(self.left, self.n).len();
            self.hi = self.hi + self.tape.word.len() - old;
            debug_assert_eq!(Word::from(self.tape.word[..self.lo].to_vec()), compression_word(self.left, self.n).invert());
        }
    }
}
