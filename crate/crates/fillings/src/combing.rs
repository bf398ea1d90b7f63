//! Combings (a normal-form word σ_g for every element g of a ball),
//! fellow-traveller constants, length functions, the cockleshell filling and
//! the BS(1,2) rewriting system.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::diagram::{sequence_to_diagram, Diagram, DiagramError};
use crate::dps::{Move, NullSequence};
use crate::presentation::{CayleyBall, OracleError, Presentation, PresentationError, Triviality, WordOracle};
use crate::words::{Letter, Word};

const A: Letter = Letter::gen(0);
const B: Letter = Letter::gen(1);

/// Rewrites a word over {a, b} with the BS(1,2) rules
/// ab → ba², a⁻¹b → ba⁻², a²b⁻¹ → b⁻¹a, a⁻¹b⁻¹ → ab⁻¹a⁻¹ and free
/// reduction, always at the leftmost match (longest left side first), until
/// none applies.
pub fn bs12_normal_form(w: &Word) -> Word {
    let (a, b) = (A, B);
    let (ai, bi) = (a.inverse(), b.inverse());
    let mut v = w.letters().to_vec();
    let mut i = 0;
    while i < v.len() {
        let at = |k: usize| v.get(i + k).copied();
        let (rhs, len): (&[Letter], usize) = if at(0) == Some(a) && at(1) == Some(a) && at(2) == Some(bi) {
            (&[bi, a], 3)
        } else if at(1).is_some_and(|y| at(0) == Some(y.inverse())) {
            (&[], 2)
        } else if at(0) == Some(a) && at(1) == Some(b) {
            (&[b, a, a], 2)
        } else if at(0) == Some(ai) && at(1) == Some(b) {
            (&[b, ai, ai], 2)
        } else if at(0) == Some(ai) && at(1) == Some(bi) {
            (&[a, bi, ai], 2)
        } else {
            i += 1;
            continue;
        };
        v.splice(i..i + len, rhs.iter().copied());
        // A new match can start at most two letters to the left.
        i = i.saturating_sub(2);
    }
    Word::from(v)
}

/// Membership in b^r u a^s with u a word in {ab⁻¹, b⁻¹} whose first letter is
/// not b⁻¹, and no free cancellation between the blocks.
pub fn is_bs12_normal_form(w: &Word) -> bool {
    let l = w.letters();
    let lead = l.first().copied().filter(|x| x.index() == 1);
    let mut i = 0;
    while i < l.len() && Some(l[i]) == lead {
        i += 1;
    }
    // Leading b⁻¹ letters belong to b^r, so u opens with ab⁻¹.
    let mut first = true;
    loop {
        if i + 1 < l.len() && l[i] == A && l[i + 1] == B.inverse() {
            i += 2;
        } else if !first && i < l.len() && l[i] == B.inverse() {
            i += 1;
        } else {
            break;
        }
        first = false;
    }
    let tail = &l[i..];
    tail.iter().all(|&x| x == A) || tail.iter().all(|&x| x == A.inverse())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CombingPreset {
    /// Freely reduced words.
    Free,
    /// a₁^{r₁} a₂^{r₂} ⋯ a_m^{r_m}.
    Zm,
    /// The ball's own canonical words (lexicographically least geodesics).
    FiniteBall,
    Bs12,
}

impl CombingPreset {
    pub fn parse(name: &str) -> Option<CombingPreset> {
        match name {
            "free" => Some(CombingPreset::Free),
            "zm" => Some(CombingPreset::Zm),
            "finite-ball" => Some(CombingPreset::FiniteBall),
            "bs12" => Some(CombingPreset::Bs12),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CombError {
    #[error("Cayley ball of radius {radius} is too small (need {needed})")]
    BallTooSmall { radius: usize, needed: usize },
    #[error("word is not null-homotopic")]
    NotNullHomotopic,
    #[error("normal form {0} does not represent its element")]
    NotRepresentative(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

/// A normal form σ_g for every vertex g of a Cayley ball.
#[derive(Debug, Clone)]
pub struct Combing {
    preset: CombingPreset,
    ball: CayleyBall,
    forms: Vec<Word>,
}

impl Combing {
    pub fn preset(&self) -> CombingPreset {
        self.preset
    }

    pub fn ball(&self) -> &CayleyBall {
        &self.ball
    }

    /// σ_g for ball vertex `v`.
    pub fn form(&self, v: usize) -> &Word {
        &self.forms[v]
    }

    pub fn forms(&self) -> &[Word] {
        &self.forms
    }
}

/// Builds the preset's combing on every element of `ball`, checking with the
/// oracle that each σ_g represents g.
pub fn standard_combing(preset: CombingPreset, ball: &CayleyBall, o: &WordOracle) -> Result<Combing, CombError> {
    let m = ball.generator_count();
    let mut forms = Vec::with_capacity(ball.len());
    for g in ball.words() {
        let sigma = match preset {
            CombingPreset::Free => g.free_reduce(),
            CombingPreset::FiniteBall => g.clone(),
            CombingPreset::Zm => {
                let e = g.exponent_sums(m);
                let mut out = Word::empty();
                for (i, &k) in e.iter().enumerate() {
                    out = out.concat(&Word::letter(Letter::gen(i)).pow(k));
                }
                out
            }
            CombingPreset::Bs12 => bs12_normal_form(g),
        };
        match o.equal(&sigma, g)? {
            Triviality::Trivial => forms.push(sigma),
            _ => return Err(CombError::NotRepresentative(o.presentation().alphabet().show(&sigma))),
        }
    }
    Ok(Combing { preset, ball: ball.clone(), forms })
}

/// Non-decreasing ρ with ρ(0) = 0 and steps in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reparametrisation(pub Vec<usize>);

impl Reparametrisation {
    pub fn is_valid(&self) -> bool {
        self.0.first().map_or(true, |&x| x == 0) && self.0.windows(2).all(|p| p[1] == p[0] || p[1] == p[0] + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FellowTravel {
    /// max over adjacent g, h and t of d(σ_g(t), σ_h(t)).
    pub sync_k: usize,
    /// max over adjacent pairs of the best bottleneck over reparametrisations.
    pub async_k: usize,
    /// The adjacent pair (ball vertices) attaining `async_k`, with the optimal
    /// reparametrisations for it.
    pub worst_pair: Option<(usize, usize)>,
    pub reparametrisations: Option<(Reparametrisation, Reparametrisation)>,
}

/// In-ball distances between prefix points, refusing any query the ball
/// cannot answer exactly.
struct Metric<'a> {
    ball: &'a CayleyBall,
    o: &'a WordOracle,
    rows: FxHashMap<usize, Vec<usize>>,
}

impl<'a> Metric<'a> {
    fn new(ball: &'a CayleyBall, o: &'a WordOracle) -> Metric<'a> {
        Metric { ball, o, rows: FxHashMap::default() }
    }

    fn too_small(&self, needed: usize) -> CombError {
        CombError::BallTooSmall { radius: self.ball.radius(), needed }
    }

    /// Ball vertices of the prefixes σ(0), σ(1), …, σ(|σ|).
    fn path(&self, sigma: &Word) -> Result<Vec<usize>, CombError> {
        let mut out = Vec::with_capacity(sigma.len() + 1);
        let mut v = 0;
        out.push(0);
        for (i, &l) in sigma.letters().iter().enumerate() {
            v = match self.ball.step(v, l) {
                Some(t) => t,
                None => self.ball.locate(self.o, &sigma.subword(0, i + 1)).ok_or_else(|| self.too_small(i + 1))?,
            };
            out.push(v);
        }
        Ok(out)
    }

    /// A geodesic between p and q of length d stays within
    /// max(|p|, |q|) + ⌊d/2⌋ of 1, so the in-ball distance is exact when that
    /// fits in the ball.
    fn dist(&mut self, p: usize, q: usize) -> Result<usize, CombError> {
        let ball = self.ball;
        let row = self.rows.entry(q).or_insert_with(|| ball.distances_from(q));
        let d = row[p];
        let needed = ball.dist(p).max(ball.dist(q)) + d / 2;
        if d == usize::MAX || needed > ball.radius() {
            return Err(self.too_small(if d == usize::MAX { ball.radius() + 1 } else { needed }));
        }
        Ok(d)
    }

    /// The lexicographically least geodesic word from p to q.
    fn geodesic(&mut self, p: usize, q: usize) -> Result<Word, CombError> {
        let d = self.dist(p, q)?;
        let row = &self.rows[&q];
        let mut out = Vec::with_capacity(d);
        let mut u = p;
        let codes = 2 * self.ball.generator_count();
        while u != q {
            let (l, t) = (0..codes as u8)
                .map(Letter::from_code)
                .find_map(|l| self.ball.step(u, l).filter(|&t| row[t] + 1 == row[u]).map(|t| (l, t)))
                .expect("BFS predecessor exists");
            out.push(l);
            u = t;
        }
        Ok(Word::from(out))
    }
}

/// Synchronous and asynchronous fellow-travelling constants of `c` over all
/// adjacent pairs in its ball, with distances taken in `metric`.
pub fn fellow_traveler_check(c: &Combing, metric: &CayleyBall, o: &WordOracle) -> Result<FellowTravel, CombError> {
    let mut m = Metric::new(metric, o);
    let paths: Vec<Vec<usize>> = c.forms.iter().map(|s| m.path(s)).collect::<Result<_, _>>()?;
    let mut out = FellowTravel { sync_k: 0, async_k: 0, worst_pair: None, reparametrisations: None };
    let pairs: BTreeSet<(usize, usize)> = c.ball.edges().map(|(g, _, h)| (g.min(h), g.max(h))).collect();
    for (g, h) in pairs {
        let (pg, ph) = (&paths[g], &paths[h]);
        let at = |p: &[usize], t: usize| p[t.min(p.len() - 1)];
        for t in 0..pg.len().max(ph.len()) {
            out.sync_k = out.sync_k.max(m.dist(at(pg, t), at(ph, t))?);
        }
        // Bottleneck path over the (|σ_g|+1)×(|σ_h|+1) grid.
        let (n1, n2) = (pg.len(), ph.len());
        let mut best = vec![vec![usize::MAX; n2]; n1];
        let mut from = vec![vec![(0usize, 0usize); n2]; n1];
        for i in 0..n1 {
            for j in 0..n2 {
                let here = m.dist(pg[i], ph[j])?;
                let prev = [(i.wrapping_sub(1), j), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j.wrapping_sub(1))]
                    .into_iter()
                    .filter(|&(a, b)| a < n1 && b < n2)
                    .min_by_key(|&(a, b)| best[a][b]);
                best[i][j] = match prev {
                    None => here,
                    Some((a, b)) => {
                        from[i][j] = (a, b);
                        here.max(best[a][b])
                    }
                };
            }
        }
        let k = best[n1 - 1][n2 - 1];
        if out.worst_pair.is_none() || k > out.async_k {
            let mut cells = vec![(n1 - 1, n2 - 1)];
            while *cells.last().expect("non-empty") != (0, 0) {
                let (i, j) = *cells.last().expect("non-empty");
                cells.push(from[i][j]);
            }
            cells.reverse();
            out.async_k = k;
            out.worst_pair = Some((g, h));
            out.reparametrisations = Some((
                Reparametrisation(cells.iter().map(|x| x.0).collect()),
                Reparametrisation(cells.iter().map(|x| x.1).collect()),
            ));
        }
    }
    Ok(out)
}

/// L(n) = max{ℓ(σ_g) : d(1, g) ≤ n}.
pub fn length_function(c: &Combing, n: usize) -> Result<usize, CombError> {
    if n > c.ball.radius() {
        return Err(CombError::BallTooSmall { radius: c.ball.radius(), needed: n });
    }
    Ok((0..c.ball.len()).filter(|&v| c.ball.dist(v) <= n).map(|v| c.forms[v].len()).max().unwrap_or(0))
}

/// A cockleshell filling and the presentation its cells are drawn from.
#[derive(Debug, Clone)]
pub struct Cockleshell {
    pub diagram: Diagram,
    /// The distinct cell words, each null-homotopic of length ≤ 2k+2.
    pub presentation: Presentation,
    pub sequence: NullSequence,
    /// Longest rung.
    pub k: usize,
    /// 2·ℓ(w)·L(⌊ℓ(w)/2⌋).
    pub area_bound: usize,
}

/// Fills w with ladders between the combing lines to consecutive boundary
/// vertices; rungs are least geodesics in `metric`.
pub fn cockleshell(w: &Word, c: &Combing, metric: &CayleyBall, o: &WordOracle) -> Result<Cockleshell, CombError> {
    if o.is_trivial(w)? != Triviality::Trivial {
        return Err(CombError::NotNullHomotopic);
    }
    let half = w.len() / 2;
    let length = length_function(c, half)?;
    let mut m = Metric::new(metric, o);
    let mut lines = Vec::with_capacity(w.len() + 1);
    for i in 0..=w.len() {
        let v = c.ball.locate(o, &w.subword(0, i)).ok_or(CombError::BallTooSmall { radius: c.ball.radius(), needed: half })?;
        let sigma = c.forms[v].clone();
        let path = m.path(&sigma)?;
        lines.push((sigma, path));
    }

    let mut moves = Vec::new();
    let mut cells: Vec<Word> = Vec::new();
    let mut k = 0;
    // The current word is σ_{g_i} · w_{i+1} ⋯ w_ℓ.
    let mut current = w.clone();
    for (i, &x) in w.letters().iter().enumerate() {
        let (a, pa) = &lines[i];
        let (b, pb) = &lines[i + 1];
        let steps = a.len().max(b.len());
        let at = |p: &[usize], t: usize| p[t.min(p.len() - 1)];
        let mut rungs = Vec::with_capacity(steps + 1);
        for t in 0..=steps {
            let r = m.geodesic(at(pa, t), at(pb, t))?;
            k = k.max(r.len());
            rungs.push(r);
        }
        let letter_at = |s: &Word, t: usize| if t <= s.len() { s.subword(t - 1, t) } else { Word::empty() };
        // x becomes the last rung, then each ladder cell turns a_t·ρ_t into
        // ρ_{t-1}·b_t, from the far end back to ⋆.
        let mut replace = |pos: usize, u: &Word, v: &Word, moves: &mut Vec<Move>, current: &mut Word| {
            rewrite(pos, u, v, moves, &mut cells);
            let mut l = current.letters().to_vec();
            l.splice(pos..pos + u.len(), v.letters().iter().copied());
            *current = Word::from(l);
        };
        replace(a.len(), &Word::letter(x), &rungs[steps], &mut moves, &mut current);
        for t in (1..=steps).rev() {
            let u = letter_at(a, t).concat(&rungs[t]);
            let v = rungs[t - 1].concat(&letter_at(b, t));
            replace((t - 1).min(a.len()), &u, &v, &mut moves, &mut current);
        }
    }
    debug_assert!(current.is_empty());

    let mut relators: Vec<Word> = Vec::new();
    for cell in cells {
        let known = relators.iter().any(|r| r.cyclic_conjugates().contains(&cell) || r.invert().cyclic_conjugates().contains(&cell));
        if !known {
            relators.push(cell);
        }
    }
    let presentation = Presentation::new(o.presentation().alphabet().clone(), relators)?;
    let sequence = NullSequence::new(w.clone(), moves);
    let diagram = sequence_to_diagram(&sequence, &presentation)?;
    Ok(Cockleshell { diagram, presentation, sequence, k, area_bound: 2 * w.len() * length })
}

/// Moves replacing the subword u at `pos` by v, where u·v⁻¹ is null. Freely
/// trivial cells become free moves; the others one relator move each.
fn rewrite(pos: usize, u: &Word, v: &Word, moves: &mut Vec<Move>, cells: &mut Vec<Word>) {
    if u == v {
        return;
    }
    let cell = u.concat(&v.invert());
    if !cell.free_reduce().is_empty() {
        moves.push(Move::ApplyRelator { closure: cell.clone(), consumed: u.len(), at: pos });
        cells.push(cell);
        return;
    }
    // Reduce u to its free reduction, then expand to v by reversing v's
    // reduction.
    let reduce = |s: &Word| {
        let mut l = s.letters().to_vec();
        let mut out = Vec::new();
        while let Some(j) = (0..l.len().saturating_sub(1)).find(|&j| l[j] == l[j + 1].inverse()) {
            out.push((j, l[j]));
            l.drain(j..j + 2);
        }
        out
    };
    moves.extend(reduce(u).into_iter().map(|(j, _)| Move::FreeReduce { at: pos + j }));
    moves.extend(reduce(v).into_iter().rev().map(|(j, l)| Move::FreeExpand { at: pos + j, letter: l }));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dps::{replay, Basepoint};

    fn setup(p: &Presentation, r: usize) -> (WordOracle, CayleyBall) {
        let o = WordOracle::default_for(p);
        let ball = CayleyBall::build(&o, r).unwrap();
        (o, ball)
    }

    #[test]
    fn bs12_rules() {
        let p = Presentation::preset("bs12").unwrap();
        let o = WordOracle::default_for(&p);
        let nf = |s: &str| p.render(&bs12_normal_form(&p.parse_word(s).unwrap()));
        assert_eq!(nf("ab"), "baa");
        assert_eq!(nf("aA"), "");
        assert_eq!(nf("aaB"), "Ba");
        assert_eq!(nf("AB"), "aBA");
        for s in ["bAB", "abAB", "BBaabA", "aBaBAb"] {
            let w = p.parse_word(s).unwrap();
            let n = bs12_normal_form(&w);
            assert!(is_bs12_normal_form(&n), "{s} -> {}", p.render(&n));
            assert_eq!(o.equal(&w, &n).unwrap(), Triviality::Trivial);
            assert_eq!(bs12_normal_form(&n), n);
        }
        assert!(!is_bs12_normal_form(&p.parse_word("ab").unwrap()));
        assert!(!is_bs12_normal_form(&p.parse_word("bB").unwrap()));
    }

    #[test]
    fn z2_forms_collect_exponents() {
        let p = Presentation::free_abelian(2);
        let (o, ball) = setup(&p, 3);
        let c = standard_combing(CombingPreset::Zm, &ball, &o).unwrap();
        let v = ball.locate(&o, &p.parse_word("aba").unwrap()).unwrap();
        assert_eq!(p.render(c.form(v)), "aab");
        assert_eq!(length_function(&c, 3).unwrap(), 3);
        assert!(length_function(&c, 4).is_err());
    }

    #[test]
    fn fellow_traveller_constants() {
        let f2 = Presentation::free(2);
        let (o, ball) = setup(&f2, 3);
        let c = standard_combing(CombingPreset::Free, &ball, &o).unwrap();
        let metric = CayleyBall::build(&o, 6).unwrap();
        let ft = fellow_traveler_check(&c, &metric, &o).unwrap();
        assert_eq!((ft.sync_k, ft.async_k), (1, 1));

        let z2 = Presentation::free_abelian(2);
        let (o, ball) = setup(&z2, 3);
        let c = standard_combing(CombingPreset::Zm, &ball, &o).unwrap();
        let metric = CayleyBall::build(&o, 6).unwrap();
        let ft = fellow_traveler_check(&c, &metric, &o).unwrap();
        assert_eq!(ft.sync_k, 2);
        let (r1, r2) = ft.reparametrisations.unwrap();
        assert!(r1.is_valid() && r2.is_valid());
        assert!(matches!(fellow_traveler_check(&c, &ball, &o), Err(CombError::BallTooSmall { .. })));
    }

    #[test]
    fn cockleshells() {
        let z2 = Presentation::free_abelian(2);
        let (o, ball) = setup(&z2, 4);
        let metric = CayleyBall::build(&o, 8).unwrap();
        let c = standard_combing(CombingPreset::Zm, &ball, &o).unwrap();
        for (s, bound) in [("abAB", 16), ("aabbAABB", 64)] {
            let w = z2.parse_word(s).unwrap();
            let cs = cockleshell(&w, &c, &metric, &o).unwrap();
            assert_eq!(cs.area_bound, bound);
            assert!(cs.diagram.check(&cs.presentation));
            assert_eq!(cs.diagram.boundary_word(), w);
            assert!(cs.diagram.area() <= bound);
            assert!(cs.presentation.relators().iter().all(|r| r.len() <= 2 * cs.k + 2));
            assert!(replay(&cs.sequence, &cs.presentation, Basepoint::Fixed).is_null());
        }
        let f2 = Presentation::free(2);
        let (o, ball) = setup(&f2, 2);
        let c = standard_combing(CombingPreset::Free, &ball, &o).unwrap();
        let cs = cockleshell(&f2.parse_word("aA").unwrap(), &c, &ball, &o).unwrap();
        assert_eq!(cs.diagram.area(), 0);
        assert!(cockleshell(&f2.parse_word("ab").unwrap(), &c, &ball, &o).is_err());
    }
}
