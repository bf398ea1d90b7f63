//! Filling functions of a presentation: M(n) = max{M(w) : ℓ(w) ≤ n} over
//! the freely reduced null-homotopic words w, for each measure M.
//!
//! Area, FL and FFL come from backward sweeps of the proof system and are
//! exact relative to the length cap. The diagram measures of a word are
//! minimised over the diagrams built from its optimal witnesses, so they are
//! upper bounds; each carries a lower bound and counts as exact only when the
//! two meet.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::diagram::{sequence_to_diagram, Diagram, DglMode, DiagramError};
use crate::dps::{Basepoint, Dps, DpsError, NullSequence, NullSweep, RelatorMoves, SearchBudget};
use crate::presentation::{CayleyBall, OracleError, Presentation, Triviality, WordOracle};
use crate::words::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    Area,
    Fl,
    Ffl,
    IDiam,
    EDiam,
    Gl,
    Dgl,
    Rad,
}

impl Measure {
    pub const ALL: [Measure; 8] =
        [Measure::Area, Measure::Fl, Measure::Ffl, Measure::IDiam, Measure::EDiam, Measure::Gl, Measure::Dgl, Measure::Rad];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Area => "area",
            Measure::Fl => "fl",
            Measure::Ffl => "ffl",
            Measure::IDiam => "idiam",
            Measure::EDiam => "ediam",
            Measure::Gl => "gl",
            Measure::Dgl => "dgl",
            Measure::Rad => "rad",
        }
    }

    pub fn parse(name: &str) -> Option<Measure> {
        Measure::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Measured on diagrams rather than read off a proof-system search.
    pub fn is_diagram_measure(self) -> bool {
        !matches!(self, Measure::Area | Measure::Fl | Measure::Ffl)
    }
}

/// Which words `enumerate_null_words` keeps from each symmetry class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Symmetry {
    #[default]
    None,
    /// One of w, w⁻¹ (the least). Every measure is invariant.
    Inverse,
    /// The least freely reduced word among the rotations of w and w⁻¹. FL is
    /// not invariant under rotation; the other measures are.
    CyclicInverse,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FillError {
    #[error("oracle could not decide whether {0} is trivial")]
    OracleIndecisive(String),
    #[error("{0} is not null-homotopic")]
    NotNullHomotopic(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Dps(#[from] DpsError),
}

/// All freely reduced null-homotopic words of length ≤ n, ordered by length
/// and then letter code.
pub fn enumerate_null_words(p: &Presentation, o: &WordOracle, n: usize, symmetry: Symmetry) -> Result<Vec<Word>, FillError> {
    let letters = p.alphabet().letters();
    let mut out = Vec::new();
    let mut layer = vec![Word::empty()];
    for len in 0..=n {
        for w in &layer {
            if !keeps(w, symmetry) {
                continue;
            }
            match o.is_trivial(w)? {
                Triviality::Trivial => out.push(w.clone()),
                Triviality::Nontrivial => {}
                Triviality::Unknown => return Err(FillError::OracleIndecisive(p.alphabet().show(w))),
            }
        }
        if len == n {
            break;
        }
        let mut next = Vec::with_capacity(layer.len() * letters.len());
        for w in &layer {
            for &l in &letters {
                if w.letters().last() == Some(&l.inverse()) {
                    continue;
                }
                let mut v = w.letters().to_vec();
                v.push(l);
                next.push(Word::from(v));
            }
        }
        layer = next;
    }
    Ok(out)
}

fn keeps(w: &Word, symmetry: Symmetry) -> bool {
    match symmetry {
        Symmetry::None => true,
        Symmetry::Inverse => *w <= w.invert(),
        Symmetry::CyclicInverse => {
            let inv = w.invert();
            (0..w.len().max(1))
                .flat_map(|k| [w.rotate(k), inv.rotate(k)])
                .filter(|r| r.is_freely_reduced())
                .all(|r| *w <= r)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableBudget {
    /// Length cap of the proof-system sweeps.
    pub max_word_len: usize,
    pub max_states: usize,
    /// Spanning-tree cap for exact DGL; larger diagrams fall back to the
    /// heuristic.
    pub dgl_max_trees: u128,
    pub measures: Vec<Measure>,
    /// Skip w when w⁻¹ is smaller (safe for every measure).
    pub inverse_symmetry: bool,
    /// Worker threads; 0 picks the default.
    pub jobs: usize,
}

impl Default for TableBudget {
    fn default() -> TableBudget {
        TableBudget {
            max_word_len: 12,
            max_states: 8_000_000,
            dgl_max_trees: DglMode::DEFAULT_MAX_TREES,
            measures: Measure::ALL.to_vec(),
            inverse_symmetry: false,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Sequence(NullSequence),
    Diagram(Diagram),
}

/// One word-level measure: an attained value with its witness and a lower
/// bound valid for every filling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordValue {
    pub value: usize,
    pub lower: usize,
    pub witness: Witness,
}

impl WordValue {
    pub fn exact(&self) -> bool {
        self.value == self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordReport {
    pub word: Word,
    /// Missing entries were not resolved under the budget.
    pub values: BTreeMap<Measure, WordValue>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableCell {
    pub value: usize,
    pub lower: usize,
    pub exact: bool,
    /// A word of length ≤ n attaining `value`.
    pub word: Word,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub n: usize,
    pub cells: BTreeMap<Measure, TableCell>,
}

#[derive(Debug, Clone)]
pub struct FillingTable {
    pub presentation: Presentation,
    pub oracle: &'static str,
    pub budget: TableBudget,
    /// True if a sweep hit the state cap.
    pub truncated: bool,
    /// Radius of the Cayley ball used for EDiam and the diameter lower bounds.
    pub ball_radius: Option<usize>,
    pub rows: Vec<TableRow>,
    pub words: Vec<WordReport>,
}

impl FillingTable {
    pub fn cell(&self, n: usize, m: Measure) -> Option<&TableCell> {
        self.rows.get(n)?.cells.get(&m)
    }

    /// Header `n,measure,value,exact,witness`, one line per (n, measure).
    pub fn to_csv(&self) -> String {
        let a = self.presentation.alphabet();
        let mut out = String::from("n,measure,value,exact,witness\n");
        for row in &self.rows {
            for (m, c) in &row.cells {
                writeln!(out, "{},{},{},{},{}", row.n, m.name(), c.value, c.exact, a.show(&c.word)).expect("string write");
            }
        }
        out
    }

    pub fn report(&self, w: &Word) -> Option<&WordReport> {
        self.words.iter().find(|r| r.word == *w)
    }
}

/// Computes M(n) for n = 0..=n_max and every requested measure.
pub fn filling_table(p: &Presentation, o: &WordOracle, n_max: usize, budget: &TableBudget) -> Result<FillingTable, FillError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(budget.jobs).build().expect("thread pool");
    pool.install(|| table_inner(p, o, n_max, budget))
}

fn table_inner(p: &Presentation, o: &WordOracle, n_max: usize, budget: &TableBudget) -> Result<FillingTable, FillError> {
    let symmetry = if budget.inverse_symmetry { Symmetry::Inverse } else { Symmetry::None };
    let words = enumerate_null_words(p, o, n_max, symmetry)?;
    let wants = |m: Measure| budget.measures.contains(&m);
    let diagrams_wanted = budget.measures.iter().any(|m| m.is_diagram_measure());

    let dps = Dps::new(p, RelatorMoves::Cellular)?;
    let sweep = |bp| dps.sweep(budget.max_word_len, budget.max_states, bp);
    let (fixed, free) = rayon::join(
        || (wants(Measure::Area) || wants(Measure::Fl) || diagrams_wanted).then(|| sweep(Basepoint::Fixed)),
        || wants(Measure::Ffl).then(|| sweep(Basepoint::Free)),
    );
    let truncated = fixed.iter().chain(free.iter()).any(NullSweep::truncated);

    // Proof-system values and the diagrams built from their witnesses.
    let staged: Vec<(WordReport, Vec<Diagram>)> = words
        .par_iter()
        .map(|w| {
            let mut values = BTreeMap::new();
            let mut sequences = Vec::new();
            let trivial_lower = |m: Measure| match m {
                Measure::Area => usize::from(!w.is_empty()),
                _ => w.len(),
            };
            let lookups = [(Measure::Area, &fixed, true), (Measure::Fl, &fixed, false), (Measure::Ffl, &free, false)];
            for (m, s, area) in lookups {
                let Some(s) = s else { continue };
                let Some(found) = (if area { s.area(w) } else { s.fl(w) }) else { continue };
                sequences.push(found.witness.clone());
                if wants(m) {
                    let lower = if found.exact { found.value } else { trivial_lower(m) };
                    values.insert(m, WordValue { value: found.value, lower, witness: Witness::Sequence(found.witness) });
                }
            }
            let diagrams = if diagrams_wanted {
                sequences.iter().filter_map(|ns| sequence_to_diagram(ns, p).ok()).collect()
            } else {
                Vec::new()
            };
            (WordReport { word: w.clone(), values }, diagrams)
        })
        .collect();

    let ball = if diagrams_wanted {
        let radius = staged
            .iter()
            .flat_map(|(_, ds)| ds.iter().map(|d| d.measure().idiam))
            .map(|i| i + i / 2)
            .max()
            .unwrap_or(0);
        Some(CayleyBall::build(o, radius)?)
    } else {
        None
    };

    let dgl_mode = DglMode::Exact { max_trees: budget.dgl_max_trees };
    let reports: Vec<WordReport> = staged
        .into_par_iter()
        .map(|(mut report, diagrams)| {
            if let Some(ball) = &ball {
                let found = diagram_values(&report.word, &diagrams, ball, o, dgl_mode);
                report.values.extend(found.into_iter().filter(|(m, _)| wants(*m)));
            }
            report
        })
        .collect();

    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut cells = BTreeMap::new();
        for &m in &budget.measures {
            let mut cell = TableCell { value: 0, lower: 0, exact: !truncated, word: Word::empty() };
            for r in reports.iter().filter(|r| r.word.len() <= n) {
                match r.values.get(&m) {
                    Some(v) => {
                        if v.value > cell.value {
                            cell.value = v.value;
                            cell.word = r.word.clone();
                        }
                        cell.lower = cell.lower.max(v.lower);
                    }
                    None => cell.exact = false,
                }
            }
            cell.exact &= cell.value == cell.lower;
            cells.insert(m, cell);
        }
        rows.push(TableRow { n, cells });
    }

    Ok(FillingTable {
        presentation: p.clone(),
        oracle: o.label(),
        budget: budget.clone(),
        truncated,
        ball_radius: ball.as_ref().map(CayleyBall::radius),
        rows,
        words: reports,
    })
}

/// The requested measures of a single word, from per-word searches rather
/// than sweeps. Diagram measures are minimised over the diagrams built from
/// the Area, FL and FFL witnesses.
pub fn word_report(p: &Presentation, o: &WordOracle, w: &Word, budget: &TableBudget) -> Result<WordReport, FillError> {
    if o.is_trivial(w)? == Triviality::Nontrivial {
        return Err(FillError::NotNullHomotopic(p.render(w)));
    }
    let wants = |m: Measure| budget.measures.contains(&m);
    let diagrams_wanted = budget.measures.iter().any(|m| m.is_diagram_measure());
    let dps = Dps::new(p, RelatorMoves::Cellular)?;
    let sb = SearchBudget::new(budget.max_word_len, budget.max_states, usize::MAX >> 1);
    let mut values = BTreeMap::new();
    let mut sequences = Vec::new();
    for m in [Measure::Area, Measure::Fl, Measure::Ffl] {
        if !(wants(m) || (diagrams_wanted && m != Measure::Ffl)) {
            continue;
        }
        let result = match m {
            Measure::Area => dps.area(w, &sb)?,
            Measure::Fl => dps.fl(w, &sb)?,
            _ => dps.ffl(w, &sb)?,
        };
        let Some(found) = result.found() else { continue };
        sequences.push(found.witness.clone());
        if wants(m) {
            let trivial = if m == Measure::Area { usize::from(!w.is_empty()) } else { w.len() };
            let lower = if found.exact { found.value } else { trivial };
            values.insert(m, WordValue { value: found.value, lower, witness: Witness::Sequence(found.witness.clone()) });
        }
    }
    if diagrams_wanted {
        let diagrams: Vec<Diagram> = sequences.iter().filter_map(|ns| sequence_to_diagram(ns, p).ok()).collect();
        let radius = diagrams.iter().map(|d| d.measure().idiam).map(|i| i + i / 2).max().unwrap_or(0);
        let ball = CayleyBall::build(o, radius)?;
        let found = diagram_values(w, &diagrams, &ball, o, DglMode::Exact { max_trees: budget.dgl_max_trees });
        values.extend(found.into_iter().filter(|(m, _)| wants(*m)));
    }
    Ok(WordReport { word: w.clone(), values })
}

/// Minimises the diagram measures of `w` over `diagrams` and attaches lower
/// bounds valid for every diagram of `w`. `ball` must have radius at least
/// IDiam + ⌊IDiam/2⌋ for each diagram.
pub fn diagram_values(
    w: &Word,
    diagrams: &[Diagram],
    ball: &CayleyBall,
    o: &WordOracle,
    dgl_mode: DglMode,
) -> BTreeMap<Measure, WordValue> {
    let mut out: BTreeMap<Measure, WordValue> = BTreeMap::new();
    let spread = boundary_spread(w, ball, o);
    let gl_lower = usize::from(!w.is_empty());
    let lower = |m: Measure| match m {
        Measure::IDiam | Measure::EDiam => spread.unwrap_or(0),
        Measure::Gl => gl_lower,
        Measure::Dgl => spread.unwrap_or(0) + gl_lower,
        _ => 0,
    };
    let mut offer = |m: Measure, value: usize, d: &Diagram| {
        if out.get(&m).map_or(true, |v| value < v.value) {
            out.insert(m, WordValue { value, lower: lower(m), witness: Witness::Diagram(d.clone()) });
        }
    };
    for d in diagrams {
        let ms = d.measure();
        offer(Measure::IDiam, ms.idiam, d);
        offer(Measure::Gl, ms.gl, d);
        offer(Measure::Rad, ms.rad, d);
        if let Ok(e) = d.ediam(ball) {
            offer(Measure::EDiam, e, d);
        }
        let dgl = match d.dgl(dgl_mode) {
            Err(DiagramError::TooManyTrees { .. }) => d.dgl(DglMode::Heuristic),
            r => r,
        };
        if let Ok(g) = dgl {
            offer(Measure::Dgl, g.value, d);
        }
    }
    out
}

/// max d(w(i), w(j)) over prefixes of w: a lower bound on EDiam (hence IDiam)
/// of every diagram for w. `None` if a prefix leaves the ball.
pub fn boundary_spread(w: &Word, ball: &CayleyBall, o: &WordOracle) -> Option<usize> {
    let mut points = Vec::with_capacity(w.len() + 1);
    for i in 0..=w.len() {
        points.push(ball.locate(o, &w.subword(0, i))?);
    }
    points.sort_unstable();
    points.dedup();
    let mut best = 0;
    for &g in &points {
        let d = ball.distances_from(g);
        best = points.iter().map(|&h| d[h]).fold(best, usize::max);
    }
    Some(best)
}
