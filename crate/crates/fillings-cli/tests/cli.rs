use std::path::PathBuf;
use std::process::{Command, Output};

use fillings::dps::{replay, Basepoint, NullSequence};
use fillings::presentation::Presentation;

fn fillings(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fillings")).args(args).env_remove("FILLINGS_JOBS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fillings-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn word_problem() {
    let o = fillings(&["wp", "--preset", "z2", "--word", "abAB"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "Trivial\n"));
    let o = fillings(&["wp", "--preset", "f2", "--word", "abAB"]);
    assert_eq!(stdout(&o), "Nontrivial\n");
    let o = fillings(&["wp", "--preset", "h3", "--word", "xyXYZ", "--oracle", "heisenberg-matrix"]);
    assert_eq!(stdout(&o), "Trivial\n");
}

#[test]
fn area_of_a_square_commutator() {
    let o = fillings(&["area", "--preset", "z2", "--word", "aabbAABB", "--max-len", "12"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "4 (exact)\n"));
}

#[test]
fn budget_trips_exit_two() {
    let o = fillings(&["area", "--preset", "z2", "--word", "aabbAABB", "--max-len", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("Unknown"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["frobnicate"][..],
        &["area", "--preset", "z2"],
        &["area", "--preset", "nope", "--word", "a"],
        &["area", "--preset", "z2", "--word", "aQ"],
        &["area", "--preset", "z2", "--word", "ab"],
        &["wp", "--preset", "z2", "--word", "ab", "--oracle", "heisenberg-matrix"],
        &["table", "--preset", "z2", "--n", "2", "--measures", "volume"],
    ] {
        let o = fillings(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(fillings(&["--help"]).status.code(), Some(0));
}

#[test]
fn table_csv_is_deterministic() {
    let path = scratch("t.csv");
    let o = fillings(&["table", "--preset", "z2", "--n", "6", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().next(), Some("n,measure,value,exact,witness"));
    assert!(csv.lines().any(|l| l == "4,area,1,true,abAB"));
    assert_eq!(csv.lines().count(), 1 + 7 * 8);
    let args = ["table", "--preset", "z2", "--n", "4", "--measures", "area,fl,idiam"];
    let one = fillings(&[&args[..], &["--jobs", "1"]].concat());
    let many = Command::new(env!("CARGO_BIN_EXE_fillings")).args(args).env("FILLINGS_JOBS", "4").output().unwrap();
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(one.stdout, fillings(&args).stdout);
}

#[test]
fn witness_files_replay() {
    let path = scratch("area.txt");
    fillings(&["fl", "--preset", "z2", "--word", "aabbAABB", "--witness", path.to_str().unwrap()]);
    let p = Presentation::preset("z2").unwrap();
    let ns = NullSequence::parse(&std::fs::read_to_string(&path).unwrap(), p.alphabet()).unwrap();
    let r = replay(&ns, &p, Basepoint::Fixed);
    assert!(r.is_null());
    assert_eq!(r.stats.max_len, 10);

    let path = scratch("h3.txt");
    let o = fillings(&["h3-fill", "--word", "xxyyXXYYZZZZ", "--witness", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let h3 = Presentation::preset("h3").unwrap();
    let ns = NullSequence::parse(&std::fs::read_to_string(&path).unwrap(), h3.alphabet()).unwrap();
    assert!(replay(&ns, &h3, Basepoint::Fixed).is_null());
}

#[test]
fn diagram_measures() {
    let o = fillings(&["idiam", "--preset", "z2", "--word", "aabbAABB"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "4 (exact)\n"));
    let o = fillings(&["gl", "--preset", "z2", "--word", "aabbAABB"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("upper bound"));
}

#[test]
fn combing_commands() {
    let o = fillings(&["comb-check", "--preset", "f2", "--combing", "free"]);
    assert!(stdout(&o).starts_with("sync_k: 1\nasync_k: 1\n"));
    let o = fillings(&["cockleshell", "--preset", "z2", "--combing", "zm", "--radius", "4", "--metric-radius", "8", "--word", "abAB"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("area_bound: 16\n"));
}

#[test]
fn families_and_compression() {
    let o = fillings(&["family", "--tree", "3"]);
    assert_eq!(stdout(&o), "n,edges,vertices,sweep_width\n3,9,10,4\n");
    let o = fillings(&["family", "--gamma", "2"]);
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("2,2,3,4,4,true,"));
    let o = fillings(&["compress", "--s", "4", "--n", "2"]);
    assert!(stdout(&o).starts_with("u: xxyyXXYY\n"));
    let o = fillings(&["family", "--gamma", "3", "--delta", "2"]);
    assert_eq!(o.status.code(), Some(1));
}
