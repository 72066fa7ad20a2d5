//! Self-play runs, checkpoint evaluation, seed sweeps and the learning-rate
//! grid search.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimators::{theorem_schedules, ScheduleInputs, ScheduleParams};
use crate::game::{GameTree, Player};
use crate::games::GameConfig;
use crate::learners::{Algorithm, Learner, LearnerConfig, TsallisSolver};
use crate::treeplex::RealizationPlan;

/// RNG stream reserved for episode sampling.
const EPISODE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleSpec {
    Manual { eta: f64, gamma: f64 },
    /// Rates from the regret theorem of each player's algorithm.
    Theorem { delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub game: GameConfig,
    /// Algorithm of the max and min player.
    pub algos: [Algorithm; 2],
    pub schedule: ScheduleSpec,
    pub episodes: usize,
    pub eval_every: usize,
    pub seed: u64,
    /// Track oracle regrets. Costs one pass over the payoff table per
    /// episode.
    pub track_regret: bool,
    /// Restart both learners on epochs of length 1, 2, 4, ... with the
    /// schedule tuned for the epoch length.
    pub doubling: bool,
    /// Stop at the first checkpoint whose average-profile exploitability is
    /// at most this value.
    pub target_exploitability: Option<f64>,
    pub tsallis_q: f64,
    pub tsallis_solver: TsallisSolver,
    /// Write zero into `wall_ms` so that records are reproducible bit for bit.
    pub no_timing: bool,
    /// Keep every iterate's realization plans (for audits on short runs).
    pub record_iterates: bool,
}

impl RunConfig {
    pub fn new(game: GameConfig, algos: [Algorithm; 2], schedule: ScheduleSpec, episodes: usize) -> Self {
        Self {
            game,
            algos,
            schedule,
            episodes,
            eval_every: (episodes / 100).max(1),
            seed: 0,
            track_regret: true,
            doubling: false,
            target_exploitability: None,
            tsallis_q: 0.5,
            tsallis_solver: TsallisSolver::default(),
            no_timing: false,
            record_iterates: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Argument("T must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Argument("eval_every must be at least 1".into()));
        }
        match self.schedule {
            ScheduleSpec::Manual { eta, gamma } => {
                if !(eta > 0.0 && eta.is_finite()) || !(gamma >= 0.0 && gamma.is_finite()) {
                    return Err(Error::Argument(format!("need eta > 0 and gamma >= 0, got {eta}, {gamma}")));
                }
                if self.doubling {
                    return Err(Error::Argument("doubling needs a theorem schedule".into()));
                }
            }
            ScheduleSpec::Theorem { delta } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::Argument(format!("delta must lie in (0, 1), got {delta}")));
                }
                for a in self.algos {
                    if a.theorem_mode().is_none() {
                        return Err(Error::Argument(format!("{a} has no theorem schedule; pass --eta and --gamma")));
                    }
                }
            }
        }
        if !(self.tsallis_q > 0.0 && self.tsallis_q < 1.0) {
            return Err(Error::Argument(format!("Tsallis exponent must lie in (0, 1), got {}", self.tsallis_q)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub episode: usize,
    pub exploit_avg: f64,
    pub exploit_last: f64,
    /// NaN when regrets are not tracked.
    pub regret_max: f64,
    pub regret_min: f64,
    /// `(R_max + R_min) / episode`.
    pub theorem1_bound: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub game: String,
    pub algos: [Algorithm; 2],
    pub seed: u64,
    /// Reported rates: the manual values, or the max player's schedule.
    pub eta: f64,
    pub gamma: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub average: [RealizationPlan; 2],
    pub iterates: Vec<[RealizationPlan; 2]>,
    /// Largest inner-solver duality gap seen by either learner.
    pub max_solver_gap: f64,
}

impl RunRecord {
    pub fn algo_label(&self) -> String {
        if self.algos[0] == self.algos[1] {
            self.algos[0].name().to_string()
        } else {
            format!("{}/{}", self.algos[0], self.algos[1])
        }
    }

    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("a run has at least one checkpoint")
    }
}

/// Schedule of one player for a horizon of `episodes`.
pub fn player_schedule(
    cfg: &RunConfig,
    game: &GameTree,
    player: Player,
    episodes: usize,
) -> Result<ScheduleParams> {
    let tp = game.treeplex(player);
    match cfg.schedule {
        ScheduleSpec::Manual { eta, gamma } => ScheduleParams::manual(eta, gamma, tp.max_depth()),
        ScheduleSpec::Theorem { delta } => {
            let algo = cfg.algos[player.index()];
            let mode = algo
                .theorem_mode()
                .ok_or_else(|| Error::Argument(format!("{algo} has no theorem schedule")))?;
            let inputs = ScheduleInputs {
                depth: tp.max_depth(),
                num_sequences: tp.num_sequences(),
                episodes,
                delta,
                tsallis_q: cfg.tsallis_q,
                actions: tp.constant_action_count(),
            };
            theorem_schedules(mode, &inputs)
        }
    }
}

fn reported_rates(params: &ScheduleParams) -> (f64, f64) {
    if params.eta.is_finite() {
        (params.eta, params.gamma)
    } else {
        (
            params.eta_h.first().copied().unwrap_or(f64::NAN),
            params.gamma_h.first().copied().unwrap_or(f64::NAN),
        )
    }
}

fn make_learners(cfg: &RunConfig, game: &GameTree, episodes: usize) -> Result<[Learner; 2]> {
    let build = |p: Player| -> Result<Learner> {
        let mut lc = LearnerConfig::new(cfg.algos[p.index()], player_schedule(cfg, game, p, episodes)?);
        lc.tsallis_q = cfg.tsallis_q;
        lc.tsallis_solver = cfg.tsallis_solver;
        Learner::new(game.treeplex_arc(p), lc)
    };
    Ok([build(Player::Max)?, build(Player::Min)?])
}

/// Episode counts at which the run is evaluated.
pub fn checkpoint_episodes(episodes: usize, eval_every: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=episodes / eval_every).map(|k| k * eval_every).collect();
    if out.last() != Some(&episodes) {
        out.push(episodes);
    }
    out
}

pub fn run_selfplay(cfg: &RunConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let game = cfg.game.build()?;
    run_selfplay_on(cfg, &game)
}

/// Runs on an already built game; `cfg.game` is used for labelling only.
pub fn run_selfplay_on(cfg: &RunConfig, game: &GameTree) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(EPISODE_STREAM);

    let first_epoch = if cfg.doubling { 1 } else { cfg.episodes };
    let mut learners = make_learners(cfg, game, first_epoch)?;
    let (eta, gamma) = match cfg.schedule {
        ScheduleSpec::Manual { eta, gamma } => (eta, gamma),
        ScheduleSpec::Theorem { .. } => reported_rates(&player_schedule(cfg, game, Player::Max, cfg.episodes)?),
    };
    let mut epoch_len = first_epoch;
    let mut epoch_end = first_epoch;

    let sizes = Player::BOTH.map(|p| game.treeplex(p).num_sequences());
    let mut sums = sizes.map(|n| vec![0.0; n]);
    let mut current = sizes.map(|n| vec![0.0; n]);
    let mut sum_value = 0.0;
    let mut iterates = Vec::new();
    let mut checkpoints = Vec::new();
    let mut max_gap: f64 = 0.0;
    let schedule = checkpoint_episodes(cfg.episodes, cfg.eval_every);
    let mut next_cp = 0;

    for t in 1..=cfg.episodes {
        if t > epoch_end {
            epoch_len *= 2;
            learners = make_learners(cfg, game, epoch_len)?;
            epoch_end += epoch_len;
        }
        for (i, l) in learners.iter().enumerate() {
            l.realization_into(&mut current[i]);
            for (a, v) in sums[i].iter_mut().zip(&current[i]) {
                *a += v;
            }
        }
        if cfg.track_regret {
            sum_value += game.value_of_plans(&current[0], &current[1])?;
        }
        if cfg.record_iterates {
            iterates.push(current.clone().map(RealizationPlan::from_values));
        }
        let ep = game.sample_episode(learners[0].policy(), learners[1].policy(), &mut rng);
        learners[0].observe(&ep.max)?;
        learners[1].observe(&ep.min)?;
        max_gap = max_gap.max(learners[0].stats().max_gap).max(learners[1].stats().max_gap);

        if schedule.get(next_cp) == Some(&t) {
            next_cp += 1;
            let inv = 1.0 / t as f64;
            let avg = sums.clone().map(|s| s.into_iter().map(|v| v * inv).collect::<Vec<f64>>());
            let exploit_avg = game.exploitability_of_plans(&avg[0], &avg[1])?;
            // the profile the learners will play next
            for (i, l) in learners.iter().enumerate() {
                l.realization_into(&mut current[i]);
            }
            let exploit_last = game.exploitability_of_plans(&current[0], &current[1])?;
            let (regret_max, regret_min) = if cfg.track_regret {
                let (_, lmax) = game.best_response(Player::Max, &sums[1])?;
                let (_, lmin) = game.best_response(Player::Min, &sums[0])?;
                (
                    t as f64 - lmax / game.loss_span(Player::Max) as f64 - sum_value,
                    sum_value - lmin / game.loss_span(Player::Min) as f64,
                )
            } else {
                (f64::NAN, f64::NAN)
            };
            let wall_ms = if cfg.no_timing {
                0.0
            } else {
                start.elapsed().as_secs_f64() * 1e3
            };
            checkpoints.push(Checkpoint {
                episode: t,
                exploit_avg,
                exploit_last,
                regret_max,
                regret_min,
                theorem1_bound: (regret_max + regret_min) * inv,
                wall_ms,
            });
            if cfg.target_exploitability.is_some_and(|eps| exploit_avg <= eps) {
                break;
            }
        }
    }
    let done = checkpoints.last().map_or(cfg.episodes, |c| c.episode);
    let inv = 1.0 / done as f64;
    let average = sums.map(|s| RealizationPlan::from_values(s.into_iter().map(|v| v * inv).collect()));
    Ok(RunRecord {
        game: cfg.game.to_string(),
        algos: cfg.algos,
        seed: cfg.seed,
        eta,
        gamma,
        checkpoints,
        average,
        iterates,
        max_solver_gap: max_gap,
    })
}

/// Maps `f` over `items` with at most `threads` workers. Output order
/// follows input order.
pub fn parallel_map<T, R, F>(items: &[T], threads: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if threads == 0 {
        return Err(Error::Argument("parallelism must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    if threads > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
        return Ok(pool.install(|| items.par_iter().map(&f).collect()));
    }
    Ok(items.iter().map(f).collect())
}

/// Runs every configuration; failures are kept in place so the sweep
/// continues past them.
pub fn sweep(cfgs: &[RunConfig], threads: usize) -> Result<Vec<Result<RunRecord>>> {
    let games: Vec<Arc<GameTree>> = {
        let mut built: Vec<(String, Arc<GameTree>)> = Vec::new();
        let mut out = Vec::with_capacity(cfgs.len());
        for c in cfgs {
            let key = c.game.to_string();
            let g = match built.iter().find(|(k, _)| *k == key) {
                Some((_, g)) => g.clone(),
                None => {
                    let g = Arc::new(c.game.build()?);
                    built.push((key, g.clone()));
                    g
                }
            };
            out.push(g);
        }
        out
    };
    let jobs: Vec<(&RunConfig, &Arc<GameTree>)> = cfgs.iter().zip(&games).collect();
    parallel_map(&jobs, threads, |(c, g)| run_selfplay_on(c, g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub eta: f64,
    pub gamma: f64,
    pub records: Vec<RunRecord>,
    /// Mean over seeds of the final average-profile exploitability.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    pub best: usize,
}

impl GridResult {
    pub fn best_cell(&self) -> &GridCell {
        &self.cells[self.best]
    }
}

/// Grid search over the global learning rate with `gamma = eta / 20`, each
/// cell averaged over `seeds`. Ties go to the smaller rate.
pub fn grid_search(base: &RunConfig, eta_grid: &[f64], seeds: &[u64], threads: usize) -> Result<GridResult> {
    if eta_grid.is_empty() {
        return Err(Error::Argument("empty learning-rate grid".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Argument("grid search needs at least one seed".into()));
    }
    let mut cfgs = Vec::new();
    for &eta in eta_grid {
        for &seed in seeds {
            let mut c = base.clone();
            c.schedule = ScheduleSpec::Manual { eta, gamma: eta / 20.0 };
            c.doubling = false;
            c.seed = seed;
            cfgs.push(c);
        }
    }
    let mut results = sweep(&cfgs, threads)?.into_iter();
    let mut cells = Vec::new();
    for &eta in eta_grid {
        let mut records = Vec::new();
        for _ in seeds {
            records.push(results.next().expect("one result per job")?);
        }
        let score = records.iter().map(|r| r.last().exploit_avg).sum::<f64>() / records.len() as f64;
        cells.push(GridCell {
            eta,
            gamma: eta / 20.0,
            records,
            score,
        });
    }
    let best = (0..cells.len())
        .min_by(|&a, &b| {
            cells[a]
                .score
                .total_cmp(&cells[b].score)
                .then(cells[a].eta.total_cmp(&cells[b].eta))
        })
        .expect("grid is nonempty");
    Ok(GridResult { cells, best })
}

/// `log:<lo>:<hi>:<n>` or a comma-separated list.
pub fn parse_eta_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Argument(format!("bad learning-rate grid {text:?}"));
    let values: Vec<f64> = if let Some(rest) = text.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi >= lo) || n == 0 {
            return Err(bad());
        }
        if n == 1 {
            vec![lo]
        } else {
            let ratio = (hi / lo).ln() / (n - 1) as f64;
            (0..n).map(|i| lo * (ratio * i as f64).exp()).collect()
        }
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(bad());
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kuhn_cfg(algo: Algorithm, episodes: usize) -> RunConfig {
        let mut c = RunConfig::new(GameConfig::Kuhn, [algo; 2], ScheduleSpec::Manual { eta: 0.5, gamma: 0.025 }, episodes);
        c.no_timing = true;
        c
    }

    #[test]
    fn checkpoints_cover_the_horizon() {
        assert_eq!(checkpoint_episodes(10, 5), vec![5, 10]);
        assert_eq!(checkpoint_episodes(11, 5), vec![5, 10, 11]);
        assert_eq!(checkpoint_episodes(1, 7), vec![1]);
    }

    #[test]
    fn matching_pennies_one_episode_is_exact() {
        let mut c = RunConfig::new(
            GameConfig::MatchingPennies,
            [Algorithm::BalancedShannon; 2],
            ScheduleSpec::Theorem { delta: 0.1 },
            1,
        );
        c.eval_every = 1;
        let r = run_selfplay(&c).unwrap();
        assert_eq!(r.checkpoints.len(), 1);
        assert!(r.last().exploit_avg.abs() < 1e-15);
        for p in &r.average {
            assert!(p.0.iter().all(|&v| v == 0.5));
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let a = run_selfplay(&kuhn_cfg(Algorithm::Adaptive, 300)).unwrap();
        let b = run_selfplay(&kuhn_cfg(Algorithm::Adaptive, 300)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_generator() {
        let g = parse_eta_grid("log:1e-3:1:7").unwrap();
        assert_eq!(g.len(), 7);
        assert!((g[0] - 1e-3).abs() < 1e-18 && (g[6] - 1.0).abs() < 1e-12);
        for w in g.windows(2) {
            assert!((w[1] / w[0] - 10f64.powf(0.5)).abs() < 1e-9);
        }
        assert_eq!(parse_eta_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_eta_grid("log:1:0.1:3").is_err());
        assert!(parse_eta_grid("").is_err());
    }

    #[test]
    fn no_theorem_schedule_for_tweaked() {
        let c = RunConfig::new(GameConfig::Kuhn, [Algorithm::Tweaked; 2], ScheduleSpec::Theorem { delta: 0.1 }, 10);
        assert!(matches!(run_selfplay(&c), Err(Error::Argument(_))));
    }
}
