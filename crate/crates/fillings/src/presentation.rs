//! Finite presentations, word-problem oracles, Cayley balls, Dehn's
//! algorithm and the hyperbolicity probes.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use num_rational::Ratio;
use num_rational::Rational64;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::dps::{self, Move, NullSequence, SearchBudget};
use crate::words::{Alphabet, AlphabetError, Letter, ParseError, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PresentationError {
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error("line {line}: {source}")]
    Word { line: usize, source: ParseError },
    #[error("line {line}: expected `{expected}`")]
    Syntax { line: usize, expected: &'static str },
    #[error("relator {0} uses a generator outside the alphabet")]
    ForeignRelator(usize),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("generator symbol {0:?} is already in the alphabet")]
    SymbolCollision(char),
}

/// ⟨X | R⟩ with relators stored verbatim (unreduced relators such as `zZ`
/// are allowed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    alphabet: Alphabet,
    relators: Vec<Word>,
    name: Option<String>,
}

impl Presentation {
    pub fn new(alphabet: Alphabet, relators: Vec<Word>) -> Result<Presentation, PresentationError> {
        for (i, r) in relators.iter().enumerate() {
            if r.generator_span() > alphabet.len() {
                return Err(PresentationError::ForeignRelator(i));
            }
        }
        Ok(Presentation { alphabet, relators, name: None })
    }

    /// Builds a presentation from a symbol string and relator strings.
    pub fn from_strs(symbols: &str, relators: &[&str]) -> Result<Presentation, PresentationError> {
        let alphabet = Alphabet::from_symbols(symbols)?;
        let rels = relators
            .iter()
            .enumerate()
            .map(|(i, r)| alphabet.parse(r).map_err(|source| PresentationError::Word { line: i + 1, source }))
            .collect::<Result<Vec<_>, _>>()?;
        Presentation::new(alphabet, rels)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Presentation {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn generator_count(&self) -> usize {
        self.alphabet.len()
    }

    /// B: the longest relator length (0 when there are no relators).
    pub fn max_relator_len(&self) -> usize {
        self.relators.iter().map(Word::len).max().unwrap_or(0)
    }

    /// K = 2|X| + 1.
    pub fn k_constant(&self) -> usize {
        2 * self.alphabet.len() + 1
    }

    pub fn parse_word(&self, text: &str) -> Result<Word, ParseError> {
        self.alphabet.parse(text)
    }

    pub fn render(&self, w: &Word) -> String {
        self.alphabet.render(w)
    }

    pub fn relator_closure(&self) -> RelatorClosure {
        let mut words = BTreeSet::new();
        for r in &self.relators {
            words.extend(r.cyclic_conjugates());
            words.extend(r.invert().cyclic_conjugates());
        }
        words.remove(&Word::empty());
        RelatorClosure { words }
    }

    /// Reads the text format: a `gens:` line, then `rel:` lines; `#` starts a
    /// comment.
    pub fn parse_text(text: &str) -> Result<Presentation, PresentationError> {
        let mut alphabet: Option<Alphabet> = None;
        let mut relators = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match &alphabet {
                None => {
                    let rest = line
                        .strip_prefix("gens:")
                        .ok_or(PresentationError::Syntax { line: line_no, expected: "gens: <symbols>" })?;
                    let symbols = rest.split_whitespace().map(|s| {
                        let mut cs = s.chars();
                        match (cs.next(), cs.next()) {
                            (Some(c), None) => Ok(c),
                            _ => Err(PresentationError::Syntax { line: line_no, expected: "single-letter generator symbols" }),
                        }
                    });
                    alphabet = Some(Alphabet::new(symbols.collect::<Result<Vec<_>, _>>()?)?);
                }
                Some(a) => {
                    let rest = line
                        .strip_prefix("rel:")
                        .ok_or(PresentationError::Syntax { line: line_no, expected: "rel: <word>" })?;
                    let w = a
                        .parse(rest.trim())
                        .map_err(|source| PresentationError::Word { line: line_no, source })?;
                    relators.push(w);
                }
            }
        }
        let alphabet = alphabet.ok_or(PresentationError::Syntax { line: 1, expected: "gens: <symbols>" })?;
        Presentation::new(alphabet, relators)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("gens:");
        for c in self.alphabet.symbols() {
            out.push(' ');
            out.push(*c);
        }
        out.push('\n');
        for r in &self.relators {
            out.push_str("rel: ");
            out.push_str(&self.render(r));
            out.push('\n');
        }
        out
    }

    /// Catalog lookup: `f<m>`, `z<m>`, `bs12`, `h3`, `bridson`, `bg`, `ffl`.
    pub fn preset(name: &str) -> Result<Presentation, PresentationError> {
        let unknown = || PresentationError::UnknownPreset(name.to_string());
        let numbered = |prefix: &str| -> Option<usize> {
            name.strip_prefix(prefix)?.parse::<usize>().ok().filter(|&m| (1..=26).contains(&m))
        };
        if let Some(m) = numbered("f") {
            return Ok(Presentation::free(m));
        }
        if let Some(m) = numbered("z") {
            return Ok(Presentation::free_abelian(m));
        }
        let (symbols, rels): (&str, &[&str]) = match name {
            "bs12" => ("ab", &["BabAA"]),
            "h3" => ("xyz", &["xyXYZ", "xzXZ", "yzYZ"]),
            "bridson" => ("xyst", &["xyXY", "TxtXX", "SysYY"]),
            "bg" => ("ab", &["BAbaBabAA"]),
            "ffl" => ("abtuv", &["BabAA", "taTA", "vatVTA", "utUT", "vuVU"]),
            _ => return Err(unknown()),
        };
        Ok(Presentation::from_strs(symbols, rels)?.with_name(name))
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["f<m>", "z<m>", "bs12", "h3", "bridson", "bg", "ffl"]
    }

    /// The free group on the first `m` letters of the Latin alphabet.
    pub fn free(m: usize) -> Presentation {
        let alphabet = Alphabet::new((0..m).map(|i| (b'a' + i as u8) as char)).expect("1 ≤ m ≤ 26");
        Presentation { alphabet, relators: Vec::new(), name: Some(format!("f{m}")) }
    }

    /// ℤ^m with one commutator per pair of generators.
    pub fn free_abelian(m: usize) -> Presentation {
        let alphabet = Alphabet::new((0..m).map(|i| (b'a' + i as u8) as char)).expect("1 ≤ m ≤ 26");
        let mut relators = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                relators.push(Word::commutator(&Word::letter(Letter::gen(i)), &Word::letter(Letter::gen(j))));
            }
        }
        Presentation { alphabet, relators, name: Some(format!("z{m}")) }
    }

    /// Adds a spurious generator `z` with relators z, z², z³, zz⁻¹, z²z⁻¹ and
    /// [z, x] for every old generator x.
    pub fn fatten(&self) -> Result<Presentation, PresentationError> {
        if self.alphabet.index_of('z').is_some() {
            return Err(PresentationError::SymbolCollision('z'));
        }
        let mut symbols = self.alphabet.symbols().to_vec();
        symbols.push('z');
        let alphabet = Alphabet::new(symbols)?;
        let zi = alphabet.len() - 1;
        let z = Letter::gen(zi);
        let zinv = z.inverse();
        let mut relators = self.relators.clone();
        relators.push(Word::from(vec![z]));
        relators.push(Word::from(vec![z, z]));
        relators.push(Word::from(vec![z, z, z]));
        relators.push(Word::from(vec![z, zinv]));
        relators.push(Word::from(vec![z, z, zinv]));
        for i in 0..zi {
            relators.push(Word::commutator(&Word::letter(z), &Word::letter(Letter::gen(i))));
        }
        let name = self.name.as_ref().map(|n| format!("{n}+z"));
        Ok(Presentation { alphabet, relators, name })
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.alphabet.symbols().iter().map(|c| c.to_string()).collect();
        let rels: Vec<String> = self.relators.iter().map(|r| self.render(r)).collect();
        write!(f, "⟨{} | {}⟩", gens.join(", "), rels.join(", "))
    }
}

/// All rotations of all relators and their inverses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelatorClosure {
    pub words: BTreeSet<Word>,
}

impl RelatorClosure {
    pub fn contains(&self, w: &Word) -> bool {
        self.words.contains(w)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Word> {
        self.words.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Triviality {
    Trivial,
    Nontrivial,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle {0} does not apply to this presentation")]
    Incompatible(&'static str),
    #[error("word uses a generator outside the presentation's alphabet")]
    AlphabetMismatch,
    #[error("oracle could not decide a comparison")]
    Indecisive,
    #[error("Cayley ball of radius {radius} is too small (need {needed})")]
    BallTooSmall { radius: usize, needed: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleKind {
    FreeReduction,
    ExponentSum,
    HeisenbergMatrix,
    Bs12Matrix,
    /// Dehn's algorithm; the caller vouches that the presentation is a Dehn
    /// presentation, otherwise `Nontrivial` answers are not sound.
    DehnAlgorithm,
    BoundedSearch(SearchBudget),
}

impl OracleKind {
    fn label(&self) -> &'static str {
        match self {
            OracleKind::FreeReduction => "free-reduction",
            OracleKind::ExponentSum => "exponent-sum",
            OracleKind::HeisenbergMatrix => "heisenberg-matrix",
            OracleKind::Bs12Matrix => "bs12-matrix",
            OracleKind::DehnAlgorithm => "dehn-algorithm",
            OracleKind::BoundedSearch(_) => "bounded-search",
        }
    }
}

/// The Heisenberg matrix [[1, a, c], [0, 1, b], [0, 0, 1]].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Unitriangular {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Unitriangular {
    pub const IDENTITY: Unitriangular = Unitriangular { a: 0, b: 0, c: 0 };

    pub fn mul(self, o: Unitriangular) -> Unitriangular {
        Unitriangular { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c + self.a * o.b }
    }

    pub fn inverse(self) -> Unitriangular {
        Unitriangular { a: -self.a, b: -self.b, c: -self.c + self.a * self.b }
    }

    /// x ↦ E₁₂, y ↦ E₂₃, z ↦ E₁₃ (each added to the identity).
    pub fn generator(index: usize) -> Unitriangular {
        match index {
            0 => Unitriangular { a: 1, b: 0, c: 0 },
            1 => Unitriangular { a: 0, b: 1, c: 0 },
            2 => Unitriangular { a: 0, b: 0, c: 1 },
            _ => panic!("the Heisenberg group has three generators"),
        }
    }

    pub fn eval(w: &Word) -> Unitriangular {
        w.letters().iter().fold(Unitriangular::IDENTITY, |acc, &l| {
            let g = Unitriangular::generator(l.index());
            acc.mul(if l.is_inverse() { g.inverse() } else { g })
        })
    }
}

/// The affine matrix [[scale, shift], [0, 1]] with exact rational entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Affine {
    pub scale: Ratio<i128>,
    pub shift: Ratio<i128>,
}

impl Affine {
    pub fn identity() -> Affine {
        Affine { scale: Ratio::from_integer(1), shift: Ratio::from_integer(0) }
    }

    pub fn mul(self, o: Affine) -> Affine {
        Affine { scale: self.scale * o.scale, shift: self.scale * o.shift + self.shift }
    }

    pub fn inverse(self) -> Affine {
        let scale = self.scale.recip();
        Affine { scale, shift: -(scale * self.shift) }
    }

    /// a = [[1, 1], [0, 1]], b = [[1/2, 0], [0, 1]].
    pub fn generator(index: usize) -> Affine {
        match index {
            0 => Affine { scale: Ratio::from_integer(1), shift: Ratio::from_integer(1) },
            1 => Affine { scale: Ratio::new(1, 2), shift: Ratio::from_integer(0) },
            _ => panic!("BS(1,2) has two generators"),
        }
    }

    pub fn eval(w: &Word) -> Affine {
        w.letters().iter().fold(Affine::identity(), |acc, &l| {
            let g = Affine::generator(l.index());
            acc.mul(if l.is_inverse() { g.inverse() } else { g })
        })
    }
}

/// A hashable normal form of a group element, available for oracles that
/// solve the word problem by evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ElementKey {
    Reduced(Word),
    Exponents(Vec<i64>),
    Heisenberg(Unitriangular),
    Bs12(Affine),
}

/// A decision procedure for "does w represent 1".
#[derive(Debug, Clone)]
pub struct WordOracle {
    kind: OracleKind,
    presentation: Presentation,
}

impl WordOracle {
    /// Validates that `kind` applies to `p`. Matrix and exponent-sum oracles
    /// require the relator closure to match the catalog presentation.
    pub fn new(kind: OracleKind, p: &Presentation) -> Result<WordOracle, OracleError> {
        let same_closure = |q: Presentation| {
            q.alphabet().len() == p.alphabet().len() && q.relator_closure() == p.relator_closure()
        };
        let ok = match &kind {
            OracleKind::FreeReduction => p.relators().iter().all(|r| r.free_reduce().is_empty()),
            OracleKind::ExponentSum => same_closure(Presentation::free_abelian(p.generator_count())),
            OracleKind::HeisenbergMatrix => same_closure(Presentation::preset("h3").expect("catalog")),
            OracleKind::Bs12Matrix => same_closure(Presentation::preset("bs12").expect("catalog")),
            OracleKind::DehnAlgorithm | OracleKind::BoundedSearch(_) => true,
        };
        if !ok {
            return Err(OracleError::Incompatible(kind.label()));
        }
        Ok(WordOracle { kind, presentation: p.clone() })
    }

    /// The evaluation oracle matching a catalog presentation, or a bounded
    /// search when none applies.
    pub fn default_for(p: &Presentation) -> WordOracle {
        for kind in [
            OracleKind::FreeReduction,
            OracleKind::ExponentSum,
            OracleKind::HeisenbergMatrix,
            OracleKind::Bs12Matrix,
        ] {
            if let Ok(o) = WordOracle::new(kind, p) {
                return o;
            }
        }
        WordOracle { kind: OracleKind::BoundedSearch(SearchBudget::default()), presentation: p.clone() }
    }

    pub fn kind(&self) -> &OracleKind {
        &self.kind
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn label(&self) -> &'static str {
        self.kind.label()
    }

    /// The normal form of the element `w` represents, if this oracle has one.
    pub fn element_key(&self, w: &Word) -> Option<ElementKey> {
        match self.kind {
            OracleKind::FreeReduction => Some(ElementKey::Reduced(w.free_reduce())),
            OracleKind::ExponentSum => Some(ElementKey::Exponents(w.exponent_sums(self.presentation.generator_count()))),
            OracleKind::HeisenbergMatrix => Some(ElementKey::Heisenberg(Unitriangular::eval(w))),
            OracleKind::Bs12Matrix => Some(ElementKey::Bs12(Affine::eval(w))),
            _ => None,
        }
    }

    pub fn is_trivial(&self, w: &Word) -> Result<Triviality, OracleError> {
        if w.generator_span() > self.presentation.generator_count() {
            return Err(OracleError::AlphabetMismatch);
        }
        let decided = |b: bool| if b { Triviality::Trivial } else { Triviality::Nontrivial };
        Ok(match &self.kind {
            OracleKind::FreeReduction => decided(w.free_reduce().is_empty()),
            OracleKind::ExponentSum => decided(w.exponent_sums(self.presentation.generator_count()).iter().all(|&e| e == 0)),
            OracleKind::HeisenbergMatrix => decided(Unitriangular::eval(w) == Unitriangular::IDENTITY),
            OracleKind::Bs12Matrix => decided(Affine::eval(w) == Affine::identity()),
            OracleKind::DehnAlgorithm => decided(dehn_algorithm(w, &self.presentation).is_trivial()),
            OracleKind::BoundedSearch(budget) => {
                if !abelianisation_allows(w, &self.presentation) {
                    Triviality::Nontrivial
                } else if dps::prove_trivial(w, &self.presentation, budget).is_some() {
                    Triviality::Trivial
                } else {
                    Triviality::Unknown
                }
            }
        })
    }

    /// Whether `u` and `v` represent the same element.
    pub fn equal(&self, u: &Word, v: &Word) -> Result<Triviality, OracleError> {
        if let (Some(a), Some(b)) = (self.element_key(u), self.element_key(v)) {
            return Ok(if a == b { Triviality::Trivial } else { Triviality::Nontrivial });
        }
        self.is_trivial(&u.concat(&v.invert()))
    }
}

/// Necessary condition for triviality: the exponent vector of `w` lies in the
/// integer span of the relators' exponent vectors.
pub fn abelianisation_allows(w: &Word, p: &Presentation) -> bool {
    let m = p.generator_count();
    let target: Vec<i128> = w.exponent_sums(m).into_iter().map(i128::from).collect();
    let rows: Vec<Vec<i128>> = p
        .relators()
        .iter()
        .map(|r| r.exponent_sums(m).into_iter().map(i128::from).collect())
        .collect();
    in_integer_row_span(rows, target)
}

/// Integer row reduction to echelon form, then reduction of `v` against it.
fn in_integer_row_span(mut rows: Vec<Vec<i128>>, mut v: Vec<i128>) -> bool {
    let m = v.len();
    let mut basis: Vec<Vec<i128>> = Vec::new();
    for col in 0..m {
        loop {
            let mut nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
            if nz.len() <= 1 {
                if let Some(&i) = nz.first() {
                    basis.push(rows.swap_remove(i));
                }
                break;
            }
            nz.sort_by_key(|&i| rows[i][col].abs());
            let pivot = rows[nz[0]].clone();
            for &i in &nz[1..] {
                let q = rows[i][col] / pivot[col];
                for k in 0..m {
                    rows[i][k] -= q * pivot[k];
                }
            }
        }
    }
    for row in &basis {
        let col = row.iter().position(|&x| x != 0).expect("pivot row is non-zero");
        if v[col] % row[col] != 0 {
            return false;
        }
        let q = v[col] / row[col];
        for k in 0..m {
            v[k] -= q * row[k];
        }
    }
    v.iter().all(|&x| x == 0)
}

/// The ball of a given radius in the Cayley graph, with canonical forms (the
/// lexicographically least geodesic word for each element).
#[derive(Debug, Clone)]
pub struct CayleyBall {
    radius: usize,
    generators: usize,
    words: Vec<Word>,
    dist: Vec<usize>,
    /// `adj[v][code]` is the vertex reached from `v` along the letter with
    /// that code, if it lies in the ball.
    adj: Vec<Vec<Option<usize>>>,
    keys: Option<FxHashMap<ElementKey, usize>>,
}

impl CayleyBall {
    pub fn build(o: &WordOracle, radius: usize) -> Result<CayleyBall, OracleError> {
        let p = o.presentation();
        let m = p.generator_count();
        let letters = p.alphabet().letters();
        let keyed = o.element_key(&Word::empty()).is_some();
        let mut keys: FxHashMap<ElementKey, usize> = FxHashMap::default();
        let mut words = vec![Word::empty()];
        let mut dist = vec![0usize];
        if let Some(k) = o.element_key(&Word::empty()) {
            keys.insert(k, 0);
        }
        let mut adj: Vec<Vec<Option<usize>>> = vec![vec![None; 2 * m]];
        let mut shell = vec![0usize];

        let find = |words: &[Word], keys: &FxHashMap<ElementKey, usize>, w: &Word| -> Result<Option<usize>, OracleError> {
            if keyed {
                return Ok(keys.get(&o.element_key(w).expect("keyed")).copied());
            }
            for (i, u) in words.iter().enumerate() {
                match o.equal(u, w)? {
                    Triviality::Trivial => return Ok(Some(i)),
                    Triviality::Nontrivial => {}
                    Triviality::Unknown => return Err(OracleError::Indecisive),
                }
            }
            Ok(None)
        };

        for r in 0..=radius {
            let mut next = Vec::new();
            for &v in &shell {
                for &l in &letters {
                    let w = words[v].concat(&Word::letter(l));
                    let target = match find(&words, &keys, &w)? {
                        Some(t) => Some(t),
                        None if r < radius => {
                            let t = words.len();
                            if let Some(k) = o.element_key(&w) {
                                keys.insert(k, t);
                            }
                            words.push(w);
                            dist.push(r + 1);
                            adj.push(vec![None; 2 * m]);
                            next.push(t);
                            Some(t)
                        }
                        None => None,
                    };
                    if let Some(t) = target {
                        adj[v][l.code() as usize] = Some(t);
                        adj[t][l.inverse().code() as usize] = Some(v);
                    }
                }
            }
            shell = next;
        }
        Ok(CayleyBall { radius, generators: m, words, dist, adj, keys: keyed.then_some(keys) })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn generator_count(&self) -> usize {
        self.generators
    }

    /// Canonical form of vertex `v`.
    pub fn word(&self, v: usize) -> &Word {
        &self.words[v]
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// d_X(1, v).
    pub fn dist(&self, v: usize) -> usize {
        self.dist[v]
    }

    pub fn step(&self, v: usize, l: Letter) -> Option<usize> {
        self.adj[v][l.code() as usize]
    }

    /// Follows `w` from vertex `v` along ball edges.
    pub fn walk(&self, v: usize, w: &Word) -> Option<usize> {
        w.letters().iter().try_fold(v, |u, &l| self.step(u, l))
    }

    /// Looks up the element `w` represents, using the oracle's normal form when
    /// there is one and a walk from the identity otherwise.
    pub fn locate(&self, o: &WordOracle, w: &Word) -> Option<usize> {
        match (&self.keys, o.element_key(w)) {
            (Some(keys), Some(k)) => keys.get(&k).copied(),
            _ => self.walk(0, w),
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, Letter, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(move |(v, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(c, t)| t.map(|t| (v, Letter::from_code(c as u8), t)))
        })
    }

    /// BFS distances inside the ball from `src`.
    pub fn distances_from(&self, src: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.len()];
        d[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for t in self.adj[u].iter().flatten() {
                if d[*t] == usize::MAX {
                    d[*t] = d[u] + 1;
                    queue.push_back(*t);
                }
            }
        }
        d
    }

    /// All-pairs in-ball distances.
    pub fn distance_matrix(&self) -> Vec<Vec<usize>> {
        (0..self.len()).map(|v| self.distances_from(v)).collect()
    }
}

/// The smallest δ ≥ 0 with d(x,w)+d(y,z) ≤ max{d(x,y)+d(z,w), d(x,z)+d(y,w)} + δ
/// over all quadruples, using in-ball distances. With `strict`, only
/// quadruples whose six in-ball distances agree with the word metric (checked
/// through `o`) count.
pub fn four_point_delta(ball: &CayleyBall, o: &WordOracle, strict: bool) -> Rational64 {
    let d = ball.distance_matrix();
    let n = ball.len();
    let mut faithful = vec![vec![true; n]; n];
    if strict {
        for x in 0..n {
            for y in 0..n {
                let g = ball.word(x).invert().concat(ball.word(y));
                faithful[x][y] = match ball.locate(o, &g) {
                    Some(v) => ball.dist(v) == d[x][y],
                    None => false,
                };
            }
        }
    }
    let mut delta = 0i64;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                if strict && !(faithful[x][y] && faithful[x][z] && faithful[y][z]) {
                    continue;
                }
                for w in 0..n {
                    if strict && !(faithful[x][w] && faithful[y][w] && faithful[z][w]) {
                        continue;
                    }
                    let lhs = (d[x][w] + d[y][z]) as i64;
                    let rhs = (d[x][y] + d[z][w]).max(d[x][z] + d[y][w]) as i64;
                    delta = delta.max(lhs - rhs);
                }
            }
        }
    }
    Rational64::from_integer(delta)
}

/// Whether every triple x, y, z has some t with δ(x,y,z;t) ≤ δ, where δ(x,y,z;t)
/// is the largest of the three defects d(x,t)+d(t,y)−d(x,y) and its rotations.
pub fn l_delta_check(ball: &CayleyBall, delta: Rational64) -> bool {
    let d = ball.distance_matrix();
    let n = ball.len();
    let defect = |a: usize, b: usize, t: usize| (d[a][t] + d[t][b] - d[a][b]) as i64;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let found = (0..n).any(|t| {
                    let worst = defect(x, y, t).max(defect(y, z, t)).max(defect(z, x, t));
                    Rational64::from_integer(worst) <= delta
                });
                if !found {
                    return false;
                }
            }
        }
    }
    true
}

/// The outcome of Dehn's algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DehnOutcome {
    /// Reached ε; the log replays to ε.
    Trivial(NullSequence),
    /// No shortening replacement applies to this freely reduced word.
    Stuck { sequence: NullSequence, stuck_at: Word },
}

impl DehnOutcome {
    pub fn is_trivial(&self) -> bool {
        matches!(self, DehnOutcome::Trivial(_))
    }

    pub fn sequence(&self) -> &NullSequence {
        match self {
            DehnOutcome::Trivial(s) => s,
            DehnOutcome::Stuck { sequence, .. } => sequence,
        }
    }
}

/// Free-reduce, then replace a subword u by v whenever uv⁻¹ is a closure word
/// and ℓ(v) < ℓ(u); repeat until ε or stuck. Replacements are chosen at the
/// leftmost position, preferring the longest u.
pub fn dehn_algorithm(w: &Word, p: &Presentation) -> DehnOutcome {
    let closure: Vec<Word> = p.relator_closure().words.into_iter().collect();
    let mut moves = Vec::new();
    let mut cur = w.letters().to_vec();
    loop {
        while let Some(i) = (0..cur.len().saturating_sub(1)).find(|&i| cur[i] == cur[i + 1].inverse()) {
            moves.push(Move::FreeReduce { at: i });
            cur.drain(i..i + 2);
        }
        if cur.is_empty() {
            return DehnOutcome::Trivial(NullSequence::new(w.clone(), moves));
        }
        let mut best: Option<(usize, usize, &Word)> = None;
        'scan: for pos in 0..cur.len() {
            for c in &closure {
                let n = c.len();
                for u_len in (n / 2 + 1..=n).rev() {
                    if pos + u_len <= cur.len() && cur[pos..pos + u_len] == c.letters()[..u_len] {
                        if best.is_none_or(|(_, bl, _)| u_len > bl) {
                            best = Some((pos, u_len, c));
                        }
                        break;
                    }
                }
            }
            if best.is_some() {
                break 'scan;
            }
        }
        let Some((pos, u_len, c)) = best else {
            let stuck_at = Word::from(cur);
            return DehnOutcome::Stuck { sequence: NullSequence::new(w.clone(), moves), stuck_at };
        };
        let v = c.subword(u_len, c.len()).invert();
        cur.splice(pos..pos + u_len, v.letters().iter().copied());
        moves.push(Move::ApplyRelator { closure: c.clone(), consumed: u_len, at: pos });
    }
}
