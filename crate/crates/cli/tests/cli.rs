use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn iig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iig"))
        .args(args)
        .env_remove("IIG_THREADS")
        .output()
        .expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn read_csv(p: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(p).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const KUHN_THEOREM: [&str; 14] = [
    "run",
    "--game",
    "kuhn",
    "--algo-max",
    "balanced_shannon",
    "--algo-min",
    "balanced_shannon",
    "--T",
    "1000",
    "--theorem-schedule",
    "--delta",
    "0.1",
    "--seed",
    "1",
];

#[test]
fn run_writes_one_row_per_checkpoint() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r.csv");
    let mut args = KUHN_THEOREM.to_vec();
    args.extend(["--out", &out]);
    let o = iig(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    // default eval_every = T / 100
    assert_eq!(text.lines().count(), 1000 / 10 + 1);
    let (header, rows) = read_csv(&out);
    assert_eq!(header, iig_core::report::CSV_HEADER);
    assert_eq!(rows.last().unwrap()[5], "1000");
    for r in &rows {
        let avg: f64 = r[6].parse().unwrap();
        let bound: f64 = r[10].parse().unwrap();
        assert!(avg <= bound + 1e-9);
    }
}

#[test]
fn missing_out_is_a_config_error() {
    let o = iig(&KUHN_THEOREM);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--out"));
}

#[test]
fn unknown_names_list_the_valid_ones() {
    let o = iig(&["run", "--game", "chess", "--algo-max", "tweaked", "--T", "10", "--eta", "1", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("kuhn") && err.contains("leduc"), "{err}");

    let o = iig(&["run", "--game", "kuhn", "--algo-max", "cfr", "--T", "10", "--eta", "1", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("balanced_shannon") && err.contains("ixomd"), "{err}");
}

#[test]
fn bad_flag_values_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r.csv");
    for extra in [
        vec!["--threads", "0"],
        vec!["--eta", "-1"],
        vec!["--theorem-schedule", "--delta", "2"],
        vec!["--eta", "1", "--doubling"],
    ] {
        let mut args = vec!["run", "--game", "kuhn", "--algo-max", "adaptive", "--T", "10", "--out", &out];
        if !extra.contains(&"--eta") && !extra.contains(&"--theorem-schedule") {
            args.extend(["--eta", "1"]);
        }
        args.extend(extra.iter().copied());
        assert_eq!(iig(&args).status.code(), Some(2), "{args:?}");
    }
    let o = iig(&["run", "--game", "kuhn", "--algo-max", "tweaked", "--T", "10", "--theorem-schedule", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let o = iig(&[
            "run", "--game", "kuhn", "--algo-max", "tweaked", "--algo-min", "adaptive", "--T", "500", "--eta", "0.8",
            "--seeds", "3", "--threads", threads, "--no-timing", "--out", out,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let (_, rows) = read_csv(&a);
    assert_eq!(rows.len(), 3 * 100);
    assert_eq!(rows[0][1], "tweaked/adaptive");
    assert!(rows.iter().all(|r| r[11] == "0"));
    let seeds: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(seeds.into_iter().collect::<Vec<_>>(), ["0", "1", "2"]);
}

#[test]
fn gamma_defaults_to_a_twentieth_of_eta() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r.csv");
    let o = iig(&["run", "--game", "matching_pennies", "--algo-max", "ixomd", "--T", "20", "--eta", "0.5", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_csv(&out);
    assert_eq!(rows[0][3], "0.5");
    assert_eq!(rows[0][4], "0.025");
}

#[test]
fn config_file_fills_missing_flags() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r.csv");
    let cfg = path(&dir, "run.cfg");
    std::fs::write(
        &cfg,
        format!("# kuhn run\ngame = kuhn\nalgo_max = tweaked\nT = 200\neta = 0.3\neval-every = 50\nout = {out}\nno_timing = true\n"),
    )
    .unwrap();
    let o = iig(&["run", "--config", &cfg, "--eta", "0.9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_csv(&out);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][3], "0.9");

    std::fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(iig(&["run", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn dump_schedule_prints_both_players() {
    let o = iig(&["run", "--game", "kuhn", "--algo-max", "balanced_tsallis", "--T", "1000", "--theorem-schedule", "--dump-schedule"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.matches("mode        theorem-balanced-tsallis").count(), 2);
    assert!(text.contains("depth  eta_h"));
}

#[test]
fn no_regret_leaves_nan_columns() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r.csv");
    let o = iig(&["run", "--game", "kuhn", "--algo-max", "tweaked", "--T", "100", "--eta", "1", "--no-regret", "--out", &out]);
    assert!(o.status.success());
    let (_, rows) = read_csv(&out);
    assert!(rows.iter().all(|r| r[8] == "nan" && r[9] == "nan" && r[10] == "nan"));
}

#[test]
fn tune_marks_the_best_cell() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "grid.csv");
    let o = iig(&[
        "tune", "--game", "kuhn", "--algo-max", "tweaked", "--T", "2000", "--eta-grid", "log:1e-3:1:7", "--seeds", "2",
        "--no-timing", "--out", &out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&out);
    assert_eq!(header.last().unwrap(), "best");
    let mut finals: Vec<(f64, f64, bool)> = Vec::new();
    for r in &rows {
        let eta: f64 = r[3].parse().unwrap();
        let gamma: f64 = r[4].parse().unwrap();
        assert!((gamma - eta / 20.0).abs() <= 1e-9 * eta);
        if r[5] == "2000" {
            finals.push((eta, r[6].parse().unwrap(), r[12] == "1"));
        }
    }
    let etas: std::collections::BTreeSet<String> = rows.iter().map(|r| r[3].clone()).collect();
    assert_eq!(etas.len(), 7);
    let score = |eta: f64| {
        let v: Vec<f64> = finals.iter().filter(|f| f.0 == eta).map(|f| f.1).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let best_eta = finals.iter().find(|f| f.2).unwrap().0;
    for f in &finals {
        assert!(score(best_eta) <= score(f.0));
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().last().unwrap().starts_with("best eta="));
}

#[test]
fn tune_rejects_fixed_rates() {
    let o = iig(&["tune", "--game", "kuhn", "--algo-max", "tweaked", "--T", "10", "--eta", "1", "--eta-grid", "1", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = iig(&["tune", "--game", "kuhn", "--algo-max", "tweaked", "--T", "10", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn plot_draws_one_polyline_per_series() {
    let dir = TempDir::new().unwrap();
    let header = iig_core::report::CSV_HEADER.join(",");
    let csv = write(
        &dir,
        "a.csv",
        &format!("{header}\nkuhn,tweaked,0,1,0.05,10,0.5,0.5,1,1,0.2,0\nkuhn,tweaked,0,1,0.05,100,0.1,0.1,1,1,0.02,0\n"),
    );
    let svg = path(&dir, "p.svg");
    let o = iig(&["plot", &csv, "--out", &svg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<?xml") && text.contains("<svg"));
    assert_eq!(text.matches("<polyline").count(), 1);
}

#[test]
fn plot_warns_on_empty_series_and_rejects_malformed_csv() {
    let dir = TempDir::new().unwrap();
    let header = iig_core::report::CSV_HEADER.join(",");
    let csv = write(
        &dir,
        "a.csv",
        &format!("{header}\nkuhn,tweaked,0,1,0.05,10,0.5,0.5,1,1,0.2,0\nkuhn,tweaked,0,1,0.05,20,0.4,0.4,1,1,0.2,0\nkuhn,adaptive,0,1,0.05,10,nan,nan,nan,nan,nan,0\n"),
    );
    let svg = path(&dir, "p.svg");
    let o = iig(&["plot", &csv, "--out", &svg]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning: skipping empty series kuhn / adaptive"));
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 1);

    let bad = write(&dir, "bad.csv", "game,algo\nkuhn,tweaked\n");
    assert_eq!(iig(&["plot", &bad, "--out", &svg]).status.code(), Some(2));
    let bad = write(&dir, "bad2.csv", &format!("{header}\nkuhn,tweaked,0,1,0.05,ten,0.5,0.5,1,1,0.2,0\n"));
    assert_eq!(iig(&["plot", &bad, "--out", &svg]).status.code(), Some(2));
    assert!(!Path::new(&path(&dir, "missing.csv")).exists());
    assert_eq!(iig(&["plot", &path(&dir, "missing.csv"), "--out", &svg]).status.code(), Some(2));
}

#[test]
fn run_then_plot_round_trip() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r.csv");
    let o = iig(&["run", "--game", "kuhn", "--algo-max", "tweaked", "--T", "1000", "--eta", "1", "--seeds", "2", "--out", &out]);
    assert!(o.status.success());
    let svg = path(&dir, "p.svg");
    assert!(iig(&["plot", &out, "--out", &svg]).status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 1);
    assert_eq!(text.matches("<polygon").count(), 1);
}
