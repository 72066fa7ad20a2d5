use std::time::Instant;

use iig_core::games::{GameConfig, LeducConfig};
use iig_core::learners::Algorithm;
use iig_core::selfplay::{grid_search, parse_eta_grid, run_selfplay, sweep, RunConfig, ScheduleSpec};
use iig_core::treeplex::average_realization;

fn cfg(game: GameConfig, algo: Algorithm, episodes: usize) -> RunConfig {
    let mut c = RunConfig::new(game, [algo; 2], ScheduleSpec::Manual { eta: 0.8, gamma: 0.04 }, episodes);
    c.no_timing = true;
    c
}

#[test]
fn sweep_is_deterministic_across_parallelism() {
    let cfgs: Vec<RunConfig> = (0..6)
        .map(|seed| {
            let mut c = cfg(GameConfig::Kuhn, Algorithm::ALL[seed as usize % 5], 300);
            c.seed = seed;
            c
        })
        .collect();
    let one = sweep(&cfgs, 1).unwrap();
    let many = sweep(&cfgs, 8).unwrap();
    assert_eq!(one, many);
    for (c, r) in cfgs.iter().zip(&one) {
        assert_eq!(r.as_ref().unwrap().seed, c.seed);
    }
}

#[test]
fn sweep_cardinality_and_failures_in_place() {
    let mut cfgs = Vec::new();
    for algo in [Algorithm::Tweaked, Algorithm::Adaptive] {
        for seed in 0..10 {
            let mut c = cfg(GameConfig::MatchingPennies, algo, 50);
            c.seed = seed;
            cfgs.push(c);
        }
    }
    cfgs[3].tsallis_q = 2.0;
    let out = sweep(&cfgs, 2).unwrap();
    assert_eq!(out.len(), 20);
    assert!(out[3].is_err());
    assert_eq!(out.iter().filter(|r| r.is_ok()).count(), 19);
    assert!(sweep(&cfgs, 0).is_err());
}

#[test]
fn incremental_average_matches_stored_iterates() {
    for algo in Algorithm::ALL {
        let mut c = cfg(GameConfig::Kuhn, algo, 100);
        c.record_iterates = true;
        let rec = run_selfplay(&c).unwrap();
        assert_eq!(rec.iterates.len(), 100);
        for p in 0..2 {
            let plans: Vec<_> = rec.iterates.iter().map(|it| it[p].clone()).collect();
            let avg = average_realization(&plans).unwrap();
            for (a, b) in avg.values().iter().zip(rec.average[p].values()) {
                assert!((a - b).abs() <= 1e-12, "{algo}");
            }
        }
    }
}

#[test]
fn exploitability_never_exceeds_average_regret() {
    let games = [
        GameConfig::Kuhn,
        GameConfig::MatchingPennies,
        GameConfig::Random { budget: 120, branching: 3, seed: 4 },
        GameConfig::HardVariable { k: 4, h: 3, delta: 0.2, star: 2 },
        GameConfig::Leduc(LeducConfig::default()),
    ];
    for game in games {
        for algo in Algorithm::ALL {
            let t = if matches!(game, GameConfig::Leduc(_)) { 50 } else { 400 };
            let mut c = cfg(game.clone(), algo, t);
            c.eval_every = t / 10;
            let rec = run_selfplay(&c).unwrap();
            for cp in &rec.checkpoints {
                assert!(cp.exploit_avg <= cp.theorem1_bound + 1e-9, "{game} {algo}: {cp:?}");
                assert!(cp.exploit_avg >= -1e-12 && cp.exploit_last >= -1e-12);
            }
        }
    }
}

#[test]
fn doubling_restarts_and_checkpoints() {
    let mut c = RunConfig::new(GameConfig::Kuhn, [Algorithm::Adaptive; 2], ScheduleSpec::Theorem { delta: 0.1 }, 100);
    c.doubling = true;
    c.eval_every = 25;
    c.no_timing = true;
    let rec = run_selfplay(&c).unwrap();
    let eps: Vec<usize> = rec.checkpoints.iter().map(|c| c.episode).collect();
    assert_eq!(eps, [25, 50, 75, 100]);
    for cp in &rec.checkpoints {
        assert!(cp.exploit_avg <= cp.theorem1_bound + 1e-9);
    }
    let mut bad = cfg(GameConfig::Kuhn, Algorithm::Adaptive, 10);
    bad.doubling = true;
    assert!(run_selfplay(&bad).is_err());
}

#[test]
fn target_exploitability_stops_early() {
    let mut c = cfg(GameConfig::MatchingPennies, Algorithm::Tweaked, 10_000);
    c.eval_every = 10;
    c.target_exploitability = Some(0.5);
    let rec = run_selfplay(&c).unwrap();
    assert!(rec.last().episode < 10_000);
    assert!(rec.last().exploit_avg <= 0.5);
}

#[test]
fn grid_search_picks_the_lowest_mean() {
    let base = cfg(GameConfig::Kuhn, Algorithm::Tweaked, 500);
    let grid = parse_eta_grid("log:1e-3:1:7").unwrap();
    assert_eq!(grid.len(), 7);
    assert!((grid[6] - 1.0).abs() < 1e-12 && (grid[0] - 1e-3).abs() < 1e-15);
    let res = grid_search(&base, &grid, &[0, 1], 2).unwrap();
    let best = res.best_cell();
    for cell in &res.cells {
        assert_eq!(cell.gamma, cell.eta / 20.0);
        assert_eq!(cell.records.len(), 2);
        assert!(best.score <= cell.score);
        let mean = cell.records.iter().map(|r| r.last().exploit_avg).sum::<f64>() / 2.0;
        assert_eq!(mean, cell.score);
    }
    let single = grid_search(&base, &[0.3], &[0], 1).unwrap();
    assert_eq!(single.best_cell().eta, 0.3);
    assert!(grid_search(&base, &[], &[0], 1).is_err());
}

#[test]
fn parallel_sweep_is_faster_on_four_cores() {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if cores < 4 || !cfg!(feature = "parallel") {
        eprintln!("skipping speedup check: {cores} core(s) available");
        return;
    }
    let cfgs: Vec<RunConfig> = (0..10)
        .map(|seed| {
            let mut c = cfg(GameConfig::Kuhn, Algorithm::Tweaked, 40_000);
            c.seed = seed;
            c
        })
        .collect();
    let t0 = Instant::now();
    sweep(&cfgs, 1).unwrap();
    let serial = t0.elapsed();
    let t1 = Instant::now();
    sweep(&cfgs, 4).unwrap();
    let parallel = t1.elapsed();
    assert!(
        serial.as_secs_f64() >= 1.5 * parallel.as_secs_f64(),
        "serial {serial:?} vs parallel {parallel:?}"
    );
}
