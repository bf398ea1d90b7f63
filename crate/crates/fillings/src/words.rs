//! Words over a finite alphabet with formal inverses.
//!
//! Text encoding: a lowercase ASCII letter is a generator and the matching
//! uppercase letter is its inverse, so `"aB"` is a b⁻¹.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlphabetError {
    #[error("generator symbol {0:?} is not a lowercase ASCII letter")]
    BadSymbol(char),
    #[error("generator symbol {0:?} appears twice")]
    Duplicate(char),
    #[error("an alphabet needs at least one generator")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("character {found:?} at position {position} is not in the alphabet")]
pub struct ParseError {
    pub position: usize,
    pub found: char,
}

/// A generator or the inverse of a generator.
///
/// Stored as `2 * index + inverse`; letters sort generators first (in
/// alphabet order) and then inverses.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter(u8);

impl Letter {
    pub const fn new(index: usize, inverse: bool) -> Letter {
        assert!(index < 128, "generator index out of range");
        Letter((index as u8) << 1 | inverse as u8)
    }

    pub const fn gen(index: usize) -> Letter {
        Letter::new(index, false)
    }

    pub fn index(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }

    /// The exponent of this letter: +1 or -1.
    pub fn sign(self) -> i64 {
        if self.is_inverse() {
            -1
        } else {
            1
        }
    }

    /// Dense code `2 * index + inverse`, used by packed search states.
    pub fn code(self) -> u8 {
        self.0
    }

    pub fn from_code(code: u8) -> Letter {
        Letter(code)
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Letter) -> Ordering {
        (self.is_inverse(), self.index()).cmp(&(other.is_inverse(), other.index()))
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Letter) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}{}", self.index(), if self.is_inverse() { "⁻" } else { "" })
    }
}

/// Ordered generator symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Alphabet, AlphabetError> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(AlphabetError::Empty);
        }
        for (i, &c) in symbols.iter().enumerate() {
            if !c.is_ascii_lowercase() {
                return Err(AlphabetError::BadSymbol(c));
            }
            if symbols[..i].contains(&c) {
                return Err(AlphabetError::Duplicate(c));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// `Alphabet::from_symbols("ab")` is the alphabet {a, b}.
    pub fn from_symbols(symbols: &str) -> Result<Alphabet, AlphabetError> {
        Alphabet::new(symbols.chars())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> char {
        self.symbols[index]
    }

    pub fn index_of(&self, symbol: char) -> Option<usize> {
        self.symbols.iter().position(|&c| c == symbol)
    }

    pub fn contains_letter(&self, l: Letter) -> bool {
        l.index() < self.symbols.len()
    }

    /// Every letter in canonical order: generators, then inverses.
    pub fn letters(&self) -> Vec<Letter> {
        let m = self.len();
        (0..m)
            .map(Letter::gen)
            .chain((0..m).map(|i| Letter::new(i, true)))
            .collect()
    }

    pub fn letter_char(&self, l: Letter) -> char {
        let c = self.symbols[l.index()];
        if l.is_inverse() {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }

    pub fn parse_letter(&self, c: char) -> Option<Letter> {
        let index = self.index_of(c.to_ascii_lowercase())?;
        if c.is_ascii_uppercase() {
            Some(Letter::new(index, true))
        } else if c.is_ascii_lowercase() {
            Some(Letter::gen(index))
        } else {
            None
        }
    }

    /// Parses a word; ASCII whitespace is ignored.
    pub fn parse(&self, text: &str) -> Result<Word, ParseError> {
        let mut letters = Vec::with_capacity(text.len());
        for (position, c) in text.chars().enumerate() {
            if c.is_ascii_whitespace() {
                continue;
            }
            match self.parse_letter(c) {
                Some(l) => letters.push(l),
                None => return Err(ParseError { position, found: c }),
            }
        }
        Ok(Word(letters))
    }

    pub fn render(&self, w: &Word) -> String {
        w.letters().iter().map(|&l| self.letter_char(l)).collect()
    }

    /// Renders `w`, writing the empty word as `ε`.
    pub fn show(&self, w: &Word) -> String {
        if w.is_empty() {
            "ε".to_string()
        } else {
            self.render(w)
        }
    }
}

/// A finite sequence of letters. Unreduced words are ordinary values: two
/// words are equal only if they agree letter by letter.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Debug output without an alphabet uses a, b, c, ... by index.
        let s: String = self
            .0
            .iter()
            .map(|l| {
                let c = (b'a' + l.index() as u8) as char;
                if l.is_inverse() {
                    c.to_ascii_uppercase()
                } else {
                    c
                }
            })
            .collect();
        write!(f, "Word({s:?})")
    }
}

impl From<Vec<Letter>> for Word {
    fn from(letters: Vec<Letter>) -> Word {
        Word(letters)
    }
}

impl FromIterator<Letter> for Word {
    fn from_iter<I: IntoIterator<Item = Letter>>(iter: I) -> Word {
        Word(iter.into_iter().collect())
    }
}

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn letter(l: Letter) -> Word {
        Word(vec![l])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn invert(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// `self^k`; negative powers use the inverse.
    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.invert() } else { self.clone() };
        let mut v = Vec::with_capacity(base.len() * k.unsigned_abs() as usize);
        for _ in 0..k.unsigned_abs() {
            v.extend_from_slice(&base.0);
        }
        Word(v)
    }

    /// x y x⁻¹ y⁻¹.
    pub fn commutator(x: &Word, y: &Word) -> Word {
        x.concat(y).concat(&x.invert()).concat(&y.invert())
    }

    /// y⁻¹ x y.
    pub fn conjugate(x: &Word, y: &Word) -> Word {
        y.invert().concat(x).concat(y)
    }

    pub fn subword(&self, start: usize, end: usize) -> Word {
        Word(self.0[start..end].to_vec())
    }

    /// Left rotation by `k`: the letters from position `k` come first.
    pub fn rotate(&self, k: usize) -> Word {
        if self.is_empty() {
            return Word::empty();
        }
        let k = k % self.len();
        let mut v = self.0[k..].to_vec();
        v.extend_from_slice(&self.0[..k]);
        Word(v)
    }

    /// Stack-based cancellation of adjacent inverse pairs.
    pub fn free_reduce(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn is_freely_reduced(&self) -> bool {
        self.0.windows(2).all(|p| p[0] != p[1].inverse())
    }

    /// Freely reduced and first letter not inverse to the last.
    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_freely_reduced()
            && match (self.0.first(), self.0.last()) {
                (Some(&f), Some(&l)) => self.len() == 1 || f != l.inverse(),
                _ => true,
            }
    }

    /// All distinct rotations, including the word itself. The empty word has
    /// the single rotation ε.
    pub fn cyclic_conjugates(&self) -> BTreeSet<Word> {
        if self.is_empty() {
            return BTreeSet::from([Word::empty()]);
        }
        (0..self.len()).map(|k| self.rotate(k)).collect()
    }

    /// Exponent sum of each of the first `m` generators.
    pub fn exponent_sums(&self, m: usize) -> Vec<i64> {
        let mut sums = vec![0i64; m];
        for l in &self.0 {
            sums[l.index()] += l.sign();
        }
        sums
    }

    /// Largest generator index plus one (0 for ε).
    pub fn generator_span(&self) -> usize {
        self.0.iter().map(|l| l.index() + 1).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ab() -> Alphabet {
        Alphabet::from_symbols("abc").unwrap()
    }

    fn w(s: &str) -> Word {
        ab().parse(s).unwrap()
    }

    #[test]
    fn free_reduce_examples() {
        let xy = Alphabet::from_symbols("xy").unwrap();
        let r = xy.parse("xX y").unwrap().free_reduce();
        assert_eq!(xy.render(&r), "y");
        assert_eq!(Word::empty().free_reduce(), Word::empty());
        assert_eq!(w("abBA").free_reduce(), Word::empty());
    }

    #[test]
    fn invert_examples() {
        let xy = Alphabet::from_symbols("xy").unwrap();
        assert_eq!(xy.render(&xy.parse("xy").unwrap().invert()), "YX");
        assert_eq!(Word::empty().invert(), Word::empty());
        assert_eq!(ab().render(&w("aBc").invert()), "CbA");
    }

    #[test]
    fn cyclic_conjugate_examples() {
        let got: Vec<String> = w("ab").cyclic_conjugates().iter().map(|c| ab().render(c)).collect();
        assert_eq!(got, ["ab", "ba"]);
        assert_eq!(w("aa").cyclic_conjugates().len(), 1);
        assert_eq!(Word::empty().cyclic_conjugates(), BTreeSet::from([Word::empty()]));
    }

    #[test]
    fn parse_rejects_foreign_characters_with_position() {
        let e = ab().parse("ab*c").unwrap_err();
        assert_eq!(e, ParseError { position: 2, found: '*' });
        assert_eq!(ab().parse("aZ").unwrap_err().position, 1);
    }

    #[test]
    fn alphabet_validation() {
        assert_eq!(Alphabet::from_symbols("aba"), Err(AlphabetError::Duplicate('a')));
        assert_eq!(Alphabet::from_symbols("aB"), Err(AlphabetError::BadSymbol('B')));
        assert_eq!(Alphabet::from_symbols(""), Err(AlphabetError::Empty));
    }

    #[test]
    fn letter_order_puts_generators_before_inverses() {
        let letters = ab().letters();
        let rendered: String = letters.iter().map(|&l| ab().letter_char(l)).collect();
        assert_eq!(rendered, "abcABC");
        let mut sorted = letters.clone();
        sorted.sort();
        assert_eq!(sorted, letters);
    }

    #[test]
    fn commutator_and_conjugate() {
        let a = w("a");
        let b = w("b");
        assert_eq!(ab().render(&Word::commutator(&a, &b)), "abAB");
        assert_eq!(ab().render(&Word::conjugate(&a, &b)), "Bab");
        assert_eq!(ab().render(&w("ab").pow(-2)), "BABA");
    }

    fn arb_word() -> impl Strategy<Value = Word> {
        proptest::collection::vec((0usize..3, any::<bool>()), 0..24)
            .prop_map(|v| v.into_iter().map(|(i, s)| Letter::new(i, s)).collect())
    }

    fn reduce_at_random(mut v: Vec<Letter>, picks: &[usize]) -> Vec<Letter> {
        let mut k = 0;
        loop {
            let spots: Vec<usize> =
                (0..v.len().saturating_sub(1)).filter(|&i| v[i] == v[i + 1].inverse()).collect();
            if spots.is_empty() {
                return v;
            }
            let i = spots[picks.get(k).copied().unwrap_or(0) % spots.len()];
            k += 1;
            v.drain(i..i + 2);
        }
    }

    proptest! {
        #[test]
        fn free_reduction_is_confluent(w in arb_word(), picks in proptest::collection::vec(0usize..100, 0..16)) {
            let random = Word::from(reduce_at_random(w.letters().to_vec(), &picks));
            prop_assert_eq!(random, w.free_reduce());
        }

        #[test]
        fn free_reduce_is_idempotent_and_keeps_parity(w in arb_word()) {
            let r = w.free_reduce();
            prop_assert_eq!(r.free_reduce(), r.clone());
            prop_assert!(r.len() <= w.len());
            prop_assert_eq!(r.len() % 2, w.len() % 2);
            prop_assert!(r.is_freely_reduced());
        }

        #[test]
        fn inversion_laws(w in arb_word()) {
            prop_assert_eq!(w.invert().len(), w.len());
            prop_assert_eq!(w.invert().invert(), w.clone());
            prop_assert!(w.concat(&w.invert()).free_reduce().is_empty());
        }

        #[test]
        fn rendering_round_trips(w in arb_word()) {
            prop_assert_eq!(ab().parse(&ab().render(&w)).unwrap(), w);
        }
    }
}
