mod config;
mod plot;

use std::fmt;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iig_core::game::Player;
use iig_core::games::GameConfig;
use iig_core::learners::{Algorithm, TsallisSolver};
use iig_core::report::{csv_rows, CSV_HEADER};
use iig_core::selfplay::{grid_search, parse_eta_grid, player_schedule, sweep, RunConfig, RunRecord, ScheduleSpec};

use config::ConfigFile;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<iig_core::Error> for CliError {
    fn from(e: iig_core::Error) -> Self {
        match e {
            iig_core::Error::Numeric(_) => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(format!("csv: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "iig", version, about = "Self-play experiments with trajectory-feedback FTRL learners")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run self-play and write one CSV row per checkpoint.
    Run(RunArgs),
    /// Grid search on the global learning rate (gamma = eta / 20).
    Tune(TuneArgs),
    /// Log-log SVG of exploit_avg against episode.
    Plot(PlotArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct RunArgs {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<String>,
    /// Game spec, e.g. `kuhn` or `hard_var:K=8,H=4,delta=0.05,star=3`.
    #[arg(long)]
    game: Option<String>,
    #[arg(long)]
    algo_max: Option<String>,
    /// Defaults to the max player's algorithm.
    #[arg(long)]
    algo_min: Option<String>,
    /// Number of episodes.
    #[arg(long = "T")]
    episodes: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    /// Defaults to eta / 20.
    #[arg(long)]
    gamma: Option<f64>,
    /// Use the rates of each algorithm's regret theorem.
    #[arg(long)]
    theorem_schedule: bool,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    out: Option<String>,
    /// Restart on epochs of length 1, 2, 4, ... with theorem rates per epoch.
    #[arg(long)]
    doubling: bool,
    /// Print both players' schedules and exit.
    #[arg(long)]
    dump_schedule: bool,
    #[arg(long, env = "IIG_THREADS")]
    threads: Option<usize>,
    /// Write 0 into wall_ms so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Skip oracle regrets (NaN columns); saves one payoff pass per episode.
    #[arg(long)]
    no_regret: bool,
    #[arg(long)]
    tsallis_q: Option<f64>,
    /// `newton` or `afw`.
    #[arg(long)]
    tsallis_solver: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct TuneArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma list or `log:<lo>:<hi>:<n>`.
    #[arg(long)]
    eta_grid: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct PlotArgs {
    #[arg(required = true)]
    csv: Vec<String>,
    #[arg(long)]
    out: String,
}

const RUN_KEYS: [&str; 20] = [
    "game",
    "algo-max",
    "algo-min",
    "T",
    "eta",
    "gamma",
    "theorem-schedule",
    "delta",
    "seed",
    "seeds",
    "eval-every",
    "out",
    "doubling",
    "dump-schedule",
    "threads",
    "no-timing",
    "no-regret",
    "tsallis-q",
    "tsallis-solver",
    "eta-grid",
];

impl RunArgs {
    fn merge(&mut self, file: &ConfigFile) -> Result<(), CliError> {
        file.fill("game", &mut self.game)?;
        file.fill("algo-max", &mut self.algo_max)?;
        file.fill("algo-min", &mut self.algo_min)?;
        file.fill("T", &mut self.episodes)?;
        file.fill("eta", &mut self.eta)?;
        file.fill("gamma", &mut self.gamma)?;
        file.fill_switch("theorem-schedule", &mut self.theorem_schedule)?;
        file.fill("delta", &mut self.delta)?;
        file.fill("seed", &mut self.seed)?;
        file.fill("seeds", &mut self.seeds)?;
        file.fill("eval-every", &mut self.eval_every)?;
        file.fill("out", &mut self.out)?;
        file.fill_switch("doubling", &mut self.doubling)?;
        file.fill_switch("dump-schedule", &mut self.dump_schedule)?;
        file.fill("threads", &mut self.threads)?;
        file.fill_switch("no-timing", &mut self.no_timing)?;
        file.fill_switch("no-regret", &mut self.no_regret)?;
        file.fill("tsallis-q", &mut self.tsallis_q)?;
        file.fill("tsallis-solver", &mut self.tsallis_solver)?;
        Ok(())
    }

    fn threads(&self) -> Result<usize, CliError> {
        match self.threads {
            Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
            Some(n) => Ok(n),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }

    fn seeds(&self) -> Result<Vec<u64>, CliError> {
        let first = self.seed.unwrap_or(0);
        match self.seeds.unwrap_or(1) {
            0 => Err(CliError::Config("--seeds must be at least 1".into())),
            n => Ok((0..n as u64).map(|k| first + k).collect()),
        }
    }

    fn out(&self) -> Result<&str, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Config("missing --out <csv path>".into()))
    }

    fn base_config(&self) -> Result<RunConfig, CliError> {
        let game: GameConfig = self
            .game
            .as_deref()
            .ok_or_else(|| {
                CliError::Config(format!("missing --game (valid: {})", iig_core::games::GAME_NAMES.join(", ")))
            })?
            .parse()?;
        let algo_max: Algorithm = self
            .algo_max
            .as_deref()
            .ok_or_else(|| {
                let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                CliError::Config(format!("missing --algo-max (valid: {})", names.join(", ")))
            })?
            .parse()?;
        let algo_min: Algorithm = match self.algo_min.as_deref() {
            Some(s) => s.parse()?,
            None => algo_max,
        };
        let episodes = self
            .episodes
            .ok_or_else(|| CliError::Config("missing --T <episodes>".into()))?;
        let schedule = if self.theorem_schedule {
            if self.eta.is_some() || self.gamma.is_some() {
                return Err(CliError::Config("--theorem-schedule conflicts with --eta/--gamma".into()));
            }
            ScheduleSpec::Theorem {
                delta: self.delta.unwrap_or(0.1),
            }
        } else {
            match self.eta {
                Some(eta) => ScheduleSpec::Manual {
                    eta,
                    gamma: self.gamma.unwrap_or(eta / 20.0),
                },
                None if self.doubling => {
                    return Err(CliError::Config("--doubling needs --theorem-schedule".into()));
                }
                None => return Err(CliError::Config("pass --eta (and optionally --gamma) or --theorem-schedule".into())),
            }
        };
        let mut cfg = RunConfig::new(game, [algo_max, algo_min], schedule, episodes);
        if let Some(k) = self.eval_every {
            cfg.eval_every = k;
        }
        cfg.doubling = self.doubling;
        cfg.no_timing = self.no_timing;
        cfg.track_regret = !self.no_regret;
        if let Some(q) = self.tsallis_q {
            cfg.tsallis_q = q;
        }
        cfg.tsallis_solver = match self.tsallis_solver.as_deref() {
            None => TsallisSolver::default(),
            Some("newton") => TsallisSolver::Newton,
            Some("afw") => TsallisSolver::AwayStepFrankWolfe,
            Some(other) => {
                return Err(CliError::Config(format!("unknown Tsallis solver {other:?} (valid: newton, afw)")))
            }
        };
        cfg.seed = self.seed.unwrap_or(0);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn with_config(mut args: RunArgs) -> Result<RunArgs, CliError> {
    if let Some(path) = args.config.clone() {
        args.merge(&ConfigFile::load(&path, &RUN_KEYS)?)?;
    }
    Ok(args)
}

fn write_csv(path: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
        .map_err(|e| CliError::Config(format!("cannot write {path}: {e}")))
}

fn summarize(rec: &RunRecord) {
    let c = rec.last();
    println!(
        "{} {} seed={} episodes={} exploit_avg={:.6} exploit_last={:.6}",
        rec.game,
        rec.algo_label(),
        rec.seed,
        c.episode,
        c.exploit_avg,
        c.exploit_last
    );
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let args = with_config(args)?;
    let base = args.base_config()?;
    if args.dump_schedule {
        let game = base.game.build()?;
        for p in Player::BOTH {
            println!("# {} ({})", p.name(), base.algos[p.index()]);
            print!("{}", player_schedule(&base, &game, p, base.episodes)?.table());
        }
        return Ok(());
    }
    let out = args.out()?.to_string();
    let cfgs: Vec<RunConfig> = args
        .seeds()?
        .into_iter()
        .map(|seed| RunConfig { seed, ..base.clone() })
        .collect();
    let results = sweep(&cfgs, args.threads()?)?;
    let mut rows = Vec::new();
    let mut failure: Option<CliError> = None;
    for (cfg, res) in cfgs.iter().zip(results) {
        match res {
            Ok(rec) => {
                summarize(&rec);
                rows.extend(csv_rows(&rec).into_iter().map(Vec::from));
            }
            Err(e) => {
                eprintln!("error: seed {}: {e}", cfg.seed);
                let e = CliError::from(e);
                if failure.as_ref().is_none_or(|f| e.code() > f.code()) {
                    failure = Some(e);
                }
            }
        }
    }
    write_csv(&out, &CSV_HEADER, rows)?;
    failure.map_or(Ok(()), Err)
}

fn cmd_tune(args: TuneArgs) -> Result<(), CliError> {
    let mut run = args.run;
    let mut grid_text = args.eta_grid;
    if let Some(path) = run.config.clone() {
        let file = ConfigFile::load(&path, &RUN_KEYS)?;
        run.merge(&file)?;
        file.fill("eta-grid", &mut grid_text)?;
    }
    if run.theorem_schedule || run.doubling || run.eta.is_some() || run.gamma.is_some() {
        return Err(CliError::Config(
            "tune sets eta from --eta-grid and gamma = eta / 20; drop --eta, --gamma, --theorem-schedule and --doubling".into(),
        ));
    }
    let grid = parse_eta_grid(
        grid_text
            .as_deref()
            .ok_or_else(|| CliError::Config("missing --eta-grid".into()))?,
    )?;
    run.eta = Some(grid[0]);
    let base = run.base_config()?;
    let out = run.out()?.to_string();
    let result = grid_search(&base, &grid, &run.seeds()?, run.threads()?)?;
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    header.push("best");
    let mut rows = Vec::new();
    for (i, cell) in result.cells.iter().enumerate() {
        let flag = if i == result.best { "1" } else { "0" };
        println!("eta={:.6e} gamma={:.6e} score={:.6}", cell.eta, cell.gamma, cell.score);
        for rec in &cell.records {
            for row in csv_rows(rec) {
                let mut row = Vec::from(row);
                row.push(flag.to_string());
                rows.push(row);
            }
        }
    }
    write_csv(&out, &header, rows)?;
    let best = result.best_cell();
    println!("best eta={:.6e} gamma={:.6e} score={:.6}", best.eta, best.gamma, best.score);
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<(), CliError> {
    let series = plot::read_series(&args.csv)?;
    let (svg, warnings) = plot::render_svg(&series);
    for w in warnings {
        eprintln!("warning: {w}");
    }
    std::fs::write(&args.out, svg).map_err(|e| CliError::Config(format!("cannot write {}: {e}", args.out)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Run(a) => cmd_run(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_failures_exit_3() {
        assert_eq!(CliError::from(iig_core::Error::Numeric("nan".into())).code(), 3);
        assert_eq!(CliError::from(iig_core::Error::Argument("eta".into())).code(), 2);
        assert_eq!(CliError::from(iig_core::Error::Resource("big".into())).code(), 2);
    }
}
