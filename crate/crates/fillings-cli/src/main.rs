use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fillings::combing::{cockleshell, fellow_traveler_check, length_function, standard_combing, CombingPreset};
use fillings::diagram::{ExactCaps, ShellMoves};
use fillings::dps::{replay, Basepoint, Dps, RelatorMoves, SearchBudget, SearchResult};
use fillings::families::{delta_n, gamma_n, round_disc, ternary_tree, DeltaFamily, DeltaReport};
use fillings::fillfuncs::{filling_table, word_report, Measure, TableBudget};
use fillings::heisenberg::{compress_sequence, compression_word, h3_fill};
use fillings::presentation::{CayleyBall, OracleKind, Presentation, Triviality, WordOracle};
use fillings::words::Word;

#[derive(Parser)]
#[command(name = "fillings", version, about = "Exact filling invariants of null-homotopic words")]
struct Cli {
    /// Worker threads for tables; 0 uses one per core.
    #[arg(long, global = true, env = "FILLINGS_JOBS", default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Source {
    /// Catalog presentation: f<m>, z<m>, bs12, h3, bridson, bg, ffl.
    #[arg(long, conflicts_with = "presentation", required_unless_present = "presentation")]
    preset: Option<String>,
    /// Presentation file: a `gens:` line, then `rel:` lines.
    #[arg(long)]
    presentation: Option<PathBuf>,
    /// free-reduction, exponent-sum, heisenberg-matrix, bs12-matrix,
    /// dehn-algorithm or bounded-search. Defaults to the matching one.
    #[arg(long)]
    oracle: Option<String>,
}

#[derive(Args)]
struct Budget {
    /// Longest intermediate word a search may use.
    #[arg(long, default_value_t = 14)]
    max_len: usize,
    /// States a search may store.
    #[arg(long, default_value_t = 4_000_000)]
    max_states: usize,
}

#[derive(Args)]
struct WordCmd {
    #[command(flatten)]
    src: Source,
    #[arg(long)]
    word: String,
    #[command(flatten)]
    budget: Budget,
    /// Write the witness (null-sequence or diagram) here.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Args)]
struct CombArgs {
    #[command(flatten)]
    src: Source,
    /// free, zm, finite-ball or bs12.
    #[arg(long)]
    combing: String,
    /// Radius of the ball the combing is built on.
    #[arg(long, default_value_t = 3)]
    radius: usize,
    /// Radius of the ball used for distances.
    #[arg(long, default_value_t = 6)]
    metric_radius: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether a word is trivial.
    Wp {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        word: String,
    },
    /// Area(w): fewest relator applications in a null-sequence.
    Area(WordCmd),
    /// FL(w): least maximal word length along a null-sequence.
    Fl(WordCmd),
    /// FFL(w): FL with cyclic shifts allowed.
    Ffl(WordCmd),
    /// IDiam: intrinsic diameter of a small diagram for w.
    Idiam(WordCmd),
    /// EDiam: extrinsic diameter, measured in the Cayley graph.
    Ediam(WordCmd),
    /// GL: diameter of the dual graph.
    Gl(WordCmd),
    /// DGL: least Diam(T) + Diam(T*) over spanning trees T.
    Dgl(WordCmd),
    /// Rad: largest distance from a vertex to the boundary.
    Rad(WordCmd),
    /// Filling functions M(0..=n) as CSV.
    Table {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 12)]
        max_len: usize,
        #[arg(long, default_value_t = 8_000_000)]
        max_states: usize,
        /// Comma-separated subset of area,fl,ffl,idiam,ediam,gl,dgl,rad.
        #[arg(long, value_delimiter = ',')]
        measures: Vec<String>,
        /// Skip w when w⁻¹ is smaller.
        #[arg(long)]
        inverse_symmetry: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fellow-traveller constants and length function of a combing.
    CombCheck(CombArgs),
    /// Cockleshell filling of a word from a combing.
    Cockleshell {
        #[command(flatten)]
        comb: CombArgs,
        #[arg(long)]
        word: String,
        /// Write the diagram here.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Null-sequence for a word in the Heisenberg group.
    H3Fill {
        #[arg(long)]
        word: String,
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Compression of z^s to u(s) with parameter n.
    Compress {
        #[arg(long)]
        s: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Example families, reported as CSV.
    Family {
        #[arg(long, conflicts_with_all = ["delta", "tree"], required_unless_present_any = ["delta", "tree"])]
        gamma: Option<usize>,
        #[arg(long, conflicts_with = "tree")]
        delta: Option<usize>,
        #[arg(long)]
        tree: Option<usize>,
        /// Write the diagram or tree here.
        #[arg(long)]
        diagram: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Δₙ next to a round grid disc of the same area.
    DeltaProbe {
        #[arg(long)]
        n: usize,
        /// Run the exhaustive shelling search on both diagrams.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit 2: the answer is incomplete under the budget.
struct Partial;

type Outcome = Result<Option<Partial>, String>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Partial)) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load(src: &Source) -> Result<(Presentation, WordOracle), String> {
    let p = match (&src.preset, &src.presentation) {
        (Some(name), _) => Presentation::preset(name).map_err(|e| e.to_string())?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Presentation::parse_text(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        (None, None) => return Err("give --preset or --presentation".into()),
    };
    let o = match src.oracle.as_deref() {
        None => WordOracle::default_for(&p),
        Some(name) => {
            let kind = match name {
                "free-reduction" => OracleKind::FreeReduction,
                "exponent-sum" => OracleKind::ExponentSum,
                "heisenberg-matrix" => OracleKind::HeisenbergMatrix,
                "bs12-matrix" => OracleKind::Bs12Matrix,
                "dehn-algorithm" => OracleKind::DehnAlgorithm,
                "bounded-search" => OracleKind::BoundedSearch(SearchBudget::default()),
                _ => return Err(format!("unknown oracle {name:?}")),
            };
            WordOracle::new(kind, &p).map_err(|e| e.to_string())?
        }
    };
    Ok((p, o))
}

fn word(p: &Presentation, text: &str) -> Result<Word, String> {
    p.parse_word(text).map_err(|e| format!("--word {text:?}: {e}"))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => Ok(()),
    }
}

fn partial_if(incomplete: bool) -> Outcome {
    Ok(incomplete.then_some(Partial))
}

fn run(cli: Cli) -> Outcome {
    match cli.cmd {
        Cmd::Wp { src, word: text } => {
            let (p, o) = load(&src)?;
            let w = word(&p, &text)?;
            let t = o.is_trivial(&w).map_err(|e| e.to_string())?;
            println!("{t:?}");
            partial_if(t == Triviality::Unknown)
        }
        Cmd::Area(c) => search(c, Measure::Area),
        Cmd::Fl(c) => search(c, Measure::Fl),
        Cmd::Ffl(c) => search(c, Measure::Ffl),
        Cmd::Idiam(c) => diagram_measure(c, Measure::IDiam),
        Cmd::Ediam(c) => diagram_measure(c, Measure::EDiam),
        Cmd::Gl(c) => diagram_measure(c, Measure::Gl),
        Cmd::Dgl(c) => diagram_measure(c, Measure::Dgl),
        Cmd::Rad(c) => diagram_measure(c, Measure::Rad),
        Cmd::Table { src, n, max_len, max_states, measures, inverse_symmetry, out } => {
            let (p, o) = load(&src)?;
            let measures = if measures.is_empty() {
                Measure::ALL.to_vec()
            } else {
                measures
                    .iter()
                    .map(|m| Measure::parse(m).ok_or_else(|| format!("unknown measure {m:?}")))
                    .collect::<Result<Vec<_>, _>>()?
            };
            if max_len == 0 || max_states == 0 {
                return Err("budgets must be positive".into());
            }
            let budget = TableBudget { max_word_len: max_len, max_states, measures, inverse_symmetry, jobs: cli.jobs, ..TableBudget::default() };
            let table = filling_table(&p, &o, n, &budget).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &table.to_csv())?;
            let unresolved = table.words.iter().any(|r| budget.measures.iter().any(|m| !r.values.contains_key(m)));
            partial_if(table.truncated || unresolved)
        }
        Cmd::CombCheck(c) => {
            let (p, o) = load(&c.src)?;
            let (combing, metric) = combing(&c, &o)?;
            let ft = fellow_traveler_check(&combing, &metric, &o).map_err(|e| e.to_string())?;
            let lengths: Vec<String> = (0..=c.radius)
                .map(|n| length_function(&combing, n).map(|l| l.to_string()).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            println!("sync_k: {}", ft.sync_k);
            println!("async_k: {}", ft.async_k);
            if let Some((g, h)) = ft.worst_pair {
                let a = p.alphabet();
                println!("worst_pair: {} {}", a.show(combing.form(g)), a.show(combing.form(h)));
            }
            println!("length_function: {}", lengths.join(","));
            partial_if(false)
        }
        Cmd::Cockleshell { comb, word: text, witness } => {
            let (p, o) = load(&comb.src)?;
            let w = word(&p, &text)?;
            let (combing, metric) = combing(&comb, &o)?;
            let cs = cockleshell(&w, &combing, &metric, &o).map_err(|e| e.to_string())?;
            let r = replay(&cs.sequence, &cs.presentation, Basepoint::Fixed);
            println!("k: {}", cs.k);
            println!("area: {}", cs.diagram.area());
            println!("area_bound: {}", cs.area_bound);
            println!("cell_words: {}", cs.presentation.relators().len());
            println!("relator_moves: {}", r.stats.relator_count);
            println!("max_len: {}", r.stats.max_len);
            write_file(witness.as_deref(), &cs.diagram.to_text(p.alphabet()))?;
            partial_if(false)
        }
        Cmd::H3Fill { word: text, witness } => {
            let p = Presentation::preset("h3").expect("catalog");
            let w = word(&p, &text)?;
            let ns = h3_fill(&w).map_err(|e| e.to_string())?;
            let r = replay(&ns, &p, Basepoint::Fixed);
            println!("relator_moves: {}", r.stats.relator_count);
            println!("max_len: {}", r.stats.max_len);
            write_file(witness.as_deref(), &ns.render(p.alphabet()))?;
            partial_if(false)
        }
        Cmd::Compress { s, n, witness } => {
            let p = Presentation::preset("h3").expect("catalog");
            if n == 0 {
                return Err("--n must be positive".into());
            }
            let ns = compress_sequence(s, n).map_err(|e| e.to_string())?;
            let r = replay(&ns, &p, Basepoint::Fixed);
            println!("u: {}", p.alphabet().show(&compression_word(s, n)));
            println!("relator_moves: {}", r.stats.relator_count);
            println!("max_len: {}", r.stats.max_len);
            write_file(witness.as_deref(), &ns.render(p.alphabet()))?;
            partial_if(false)
        }
        Cmd::Family { gamma, delta, tree, diagram, out } => family(gamma, delta, tree, diagram.as_deref(), out.as_deref()),
        Cmd::DeltaProbe { n, exact, out } => {
            let d = delta_n(n).map_err(|e| e.to_string())?;
            let caps = exact.then_some(ExactCaps { max_faces: 64, max_edges: 200, max_states: 20_000_000, moves: ShellMoves::Collapses });
            let dr = d.report(caps).map_err(|e| e.to_string())?;
            let disc = round_disc(dr.area).map_err(|e| e.to_string())?;
            let disc = DeltaFamily { n, tree_area: disc.area(), tree_perimeter: disc.boundary_word().len(), rings: Vec::new(), diagram: disc };
            let cr = disc.report(caps).map_err(|e| e.to_string())?;
            let mut csv = format!("shape,{DELTA_HEADER}\n");
            csv.push_str(&format!("delta,{}\n", delta_row(&dr)));
            csv.push_str(&format!("disc,{}\n", delta_row(&cr)));
            emit(out.as_deref(), &csv)?;
            partial_if(exact && !(dr.fl_exact && cr.fl_exact))
        }
    }
}

fn search(c: WordCmd, m: Measure) -> Outcome {
    let (p, o) = load(&c.src)?;
    let w = word(&p, &c.word)?;
    if o.is_trivial(&w).map_err(|e| e.to_string())? == Triviality::Nontrivial {
        return Err(format!("{} is not null-homotopic", c.word));
    }
    if c.budget.max_len == 0 || c.budget.max_states == 0 {
        return Err("budgets must be positive".into());
    }
    let dps = Dps::new(&p, RelatorMoves::Cellular).map_err(|e| e.to_string())?;
    let b = SearchBudget::new(c.budget.max_len, c.budget.max_states, usize::MAX >> 1);
    let r = match m {
        Measure::Area => dps.area(&w, &b),
        Measure::Fl => dps.fl(&w, &b),
        _ => dps.ffl(&w, &b),
    }
    .map_err(|e| e.to_string())?;
    println!("{r}");
    if let SearchResult::Found(f) = &r {
        write_file(c.witness.as_deref(), &f.witness.render(p.alphabet()))?;
    }
    partial_if(r.exact_value().is_none())
}

fn diagram_measure(c: WordCmd, m: Measure) -> Outcome {
    let (p, o) = load(&c.src)?;
    let w = word(&p, &c.word)?;
    if c.budget.max_len == 0 || c.budget.max_states == 0 {
        return Err("budgets must be positive".into());
    }
    let budget = TableBudget { max_word_len: c.budget.max_len, max_states: c.budget.max_states, measures: vec![m], ..TableBudget::default() };
    let report = word_report(&p, &o, &w, &budget).map_err(|e| e.to_string())?;
    let Some(v) = report.values.get(&m) else {
        println!("Unknown");
        return partial_if(true);
    };
    if v.exact() {
        println!("{} (exact)", v.value);
    } else {
        println!("{} (upper bound; lower bound {})", v.value, v.lower);
    }
    if let fillings::fillfuncs::Witness::Diagram(d) = &v.witness {
        write_file(c.witness.as_deref(), &d.to_text(p.alphabet()))?;
    }
    partial_if(!v.exact())
}

fn combing(c: &CombArgs, o: &WordOracle) -> Result<(fillings::combing::Combing, CayleyBall), String> {
    let preset = CombingPreset::parse(&c.combing).ok_or_else(|| format!("unknown combing {:?}", c.combing))?;
    let ball = CayleyBall::build(o, c.radius).map_err(|e| e.to_string())?;
    let combing = standard_combing(preset, &ball, o).map_err(|e| e.to_string())?;
    let metric = CayleyBall::build(o, c.metric_radius).map_err(|e| e.to_string())?;
    Ok((combing, metric))
}

const DELTA_HEADER: &str = "n,area,boundary,idiam,gl,rad,fl_upper,fl_lower,fl_exact";

fn delta_row(r: &DeltaReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.n, r.area, r.boundary, r.idiam, r.gl, r.rad, r.fl_upper, r.fl_lower, r.fl_exact
    )
}

fn family(gamma: Option<usize>, delta: Option<usize>, tree: Option<usize>, diagram: Option<&Path>, out: Option<&Path>) -> Outcome {
    let a = Presentation::free(2);
    let a = a.alphabet();
    if let Some(n) = gamma {
        let g = gamma_n(n).map_err(|e| e.to_string())?;
        let r = g.report(fillings::diagram::DglMode::DEFAULT_MAX_TREES);
        let csv = format!(
            "n,diam_gamma,diam_dual,diam_path,diam_path_dual,path_dual_geodesic,best_diam,best_dual_diam,best_exact\n{},{},{},{},{},{},{},{},{}\n",
            r.n, r.diam_gamma, r.diam_dual, r.diam_path, r.diam_path_dual, r.path_dual_geodesic, r.best_diam, r.best_dual_diam, r.best_exact
        );
        emit(out, &csv)?;
        write_file(diagram, &g.diagram.to_text(a))?;
        return partial_if(!r.best_exact);
    }
    if let Some(n) = delta {
        let d = delta_n(n).map_err(|e| e.to_string())?;
        let r = d.report(None).map_err(|e| e.to_string())?;
        emit(out, &format!("{DELTA_HEADER}\n{}\n", delta_row(&r)))?;
        write_file(diagram, &d.diagram.to_text(a))?;
        return partial_if(false);
    }
    let n = tree.expect("clap requires one family");
    let t = ternary_tree(n).map_err(|e| e.to_string())?;
    let width = t.sweep_width().map_or_else(String::new, |w| w.to_string());
    emit(out, &format!("n,edges,vertices,sweep_width\n{},{},{},{}\n", n, t.edge_count(), t.graph.vertex_count(), width))?;
    let edges: String = t.graph.edges().iter().map(|(u, v)| format!("{u} {v}\n")).collect();
    write_file(diagram, &edges)?;
    partial_if(width.is_empty())
}
