//! Online learners driven by one trajectory per episode.

mod dilated;
mod u1;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use dilated::{
    balanced_to_dilated, direct_u2_solve, fast_tree_update, log_of, DilatedForm, DilatedSolution, TreeStep,
};
pub use u1::{
    shannon_u1_solve, solve_u1_afw, solve_u1_newton, tsallis_u1_solution, tsallis_u1_solve, Regularizer,
    TsallisSolver, U1Problem, U1Solution, TSALLIS_MAX_ITER,
};

use crate::error::{Error, Result};
use crate::estimators::{
    adaptive_ix, balanced_ix_params, ix_loss_estimate, ix_transition_estimate, refresh_rates_along, tweaked_ix,
    EstimatorState, RateDecay, ScheduleMode, ScheduleParams,
};
use crate::game::Trajectory;
use crate::treeplex::{
    behavioral_to_realization, compute_balanced_kernel, BalancedKernel, BehavioralPolicy, RealizationPlan, SeqId,
    Treeplex,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    BalancedShannon,
    BalancedTsallis,
    Adaptive,
    Tweaked,
    IxOmd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::BalancedShannon,
        Algorithm::BalancedTsallis,
        Algorithm::Adaptive,
        Algorithm::Tweaked,
        Algorithm::IxOmd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::BalancedShannon => "balanced_shannon",
            Algorithm::BalancedTsallis => "balanced_tsallis",
            Algorithm::Adaptive => "adaptive",
            Algorithm::Tweaked => "tweaked",
            Algorithm::IxOmd => "ixomd",
        }
    }

    /// Schedule mode backed by a regret theorem, if there is one.
    pub fn theorem_mode(self) -> Option<ScheduleMode> {
        match self {
            Algorithm::BalancedShannon => Some(ScheduleMode::TheoremBalancedShannon),
            Algorithm::BalancedTsallis => Some(ScheduleMode::TheoremBalancedTsallis),
            Algorithm::Adaptive => Some(ScheduleMode::Adaptive),
            Algorithm::Tweaked | Algorithm::IxOmd => None,
        }
    }

    pub fn is_balanced(self) -> bool {
        matches!(self, Algorithm::BalancedShannon | Algorithm::BalancedTsallis)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
            Error::Argument(format!("unknown algorithm {s:?} (valid: {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub schedule: ScheduleParams,
    pub tsallis_q: f64,
    pub tsallis_tol: f64,
    pub tsallis_solver: TsallisSolver,
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm, schedule: ScheduleParams) -> Self {
        Self {
            algorithm,
            schedule,
            tsallis_q: 0.5,
            tsallis_tol: 1e-8,
            tsallis_solver: TsallisSolver::default(),
        }
    }
}

/// Counters of the work done by the last and all updates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    /// Information sets whose local policy was rewritten by the last update.
    pub last_touched: usize,
    pub max_touched: usize,
    /// Duality gap of the last inner solve (Tsallis only).
    pub last_gap: f64,
    pub max_gap: f64,
}

#[derive(Debug, Clone)]
pub struct Learner {
    tp: Arc<Treeplex>,
    cfg: LearnerConfig,
    kernel: BalancedKernel,
    estimator: EstimatorState,
    policy: BehavioralPolicy,
    log_policy: Vec<f64>,
    log_base: Vec<f64>,
    /// Current per-information-set rates of the dilated form.
    rates: Vec<f64>,
    /// Static per-sequence IX values (balanced modes).
    ix: Vec<f64>,
    tsallis_plan: Option<Vec<f64>>,
    path_plan: Vec<f64>,
    steps: Vec<TreeStep>,
    stats: UpdateStats,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Learner {
    pub fn new(tp: Arc<Treeplex>, mut cfg: LearnerConfig) -> Result<Self> {
        if tp.max_actions() == 1 {
            // a single plan: rates are irrelevant and the theorem schedules
            // degenerate to zero (log AX = 0)
            let depth = tp.max_depth();
            cfg.schedule.eta = 1.0;
            cfg.schedule.gamma = 0.0;
            cfg.schedule.eta_h = vec![1.0; depth];
            cfg.schedule.gamma_h = vec![0.0; depth];
        }
        let kernel = compute_balanced_kernel(&tp);
        let nx = tp.num_infosets();
        let ns = tp.num_sequences();
        let sched = cfg.schedule.clone();
        let uniform = BehavioralPolicy::uniform(&tp);
        let mut learner = Self {
            estimator: EstimatorState::new(&tp),
            log_policy: log_of(&uniform),
            log_base: log_of(&uniform),
            policy: uniform,
            rates: vec![0.0; nx],
            ix: Vec::new(),
            tsallis_plan: None,
            path_plan: vec![0.0; ns],
            steps: Vec::new(),
            stats: UpdateStats::default(),
            kernel,
            tp,
            cfg,
        };
        let depth = learner.tp.max_depth();
        match learner.cfg.algorithm {
            Algorithm::BalancedShannon | Algorithm::BalancedTsallis => {
                if sched.eta_h.len() < depth || sched.gamma_h.len() < depth {
                    return Err(Error::Argument(format!("balanced learners need {depth} per-depth rates")));
                }
                for h in 0..depth {
                    check_positive("eta_h", sched.eta_h[h])?;
                    if !(sched.gamma_h[h] >= 0.0) {
                        return Err(Error::Argument(format!("gamma_h must be non-negative, got {}", sched.gamma_h[h])));
                    }
                }
                learner.ix = balanced_ix_params(&learner.kernel, &sched.gamma_h, &learner.tp)?.0;
            }
            Algorithm::Adaptive | Algorithm::Tweaked | Algorithm::IxOmd => {
                check_positive("eta", sched.eta)?;
                if !(sched.gamma >= 0.0 && sched.gamma.is_finite()) {
                    return Err(Error::Argument(format!("gamma must be non-negative, got {}", sched.gamma)));
                }
                learner.rates.fill(sched.eta);
            }
        }
        match learner.cfg.algorithm {
            Algorithm::BalancedShannon => {
                let form = balanced_to_dilated(&learner.kernel, &sched.eta_h, &learner.tp)?;
                learner.rates = form.eta_star;
                learner.log_base = form.log_mu_star.clone();
                learner.log_policy = form.log_mu_star;
                learner.policy = form.mu_star;
            }
            Algorithm::BalancedTsallis => {
                let q = learner.cfg.tsallis_q;
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::Argument(format!("Tsallis exponent must lie in (0, 1), got {q}")));
                }
                learner.solve_tsallis()?;
            }
            _ => {}
        }
        Ok(learner)
    }

    fn solve_tsallis(&mut self) -> Result<()> {
        let sol = tsallis_u1_solution(
            &self.estimator.l_tilde,
            &self.kernel,
            &self.cfg.schedule.eta_h,
            self.cfg.tsallis_q,
            &self.tp,
            self.cfg.tsallis_tol,
            self.cfg.tsallis_solver,
            self.tsallis_plan.as_deref(),
        )?;
        self.stats.last_gap = sol.gap;
        self.stats.max_gap = self.stats.max_gap.max(sol.gap);
        self.log_policy = log_of(&sol.policy);
        self.policy = sol.policy;
        self.tsallis_plan = Some(sol.plan.0 .0);
        Ok(())
    }

    pub fn algorithm(&self) -> Algorithm {
        self.cfg.algorithm
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn treeplex(&self) -> &Treeplex {
        &self.tp
    }

    pub fn policy(&self) -> &BehavioralPolicy {
        &self.policy
    }

    pub fn log_policy(&self) -> &[f64] {
        &self.log_policy
    }

    pub fn realization(&self) -> RealizationPlan {
        behavioral_to_realization(&self.policy, &self.tp).expect("policy matches its treeplex")
    }

    /// Writes the current realization plan into `out`.
    pub fn realization_into(&self, out: &mut [f64]) {
        for rec in self.tp.infosets() {
            let mass = rec.parent.map_or(1.0, |s| out[s]);
            for s in rec.sequences() {
                out[s] = mass * self.policy.0[s];
            }
        }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn kernel(&self) -> &BalancedKernel {
        &self.kernel
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.estimator
    }

    pub fn stats(&self) -> UpdateStats {
        self.stats
    }

    pub fn episodes(&self) -> usize {
        self.estimator.t
    }

    /// IX value the next update will use on sequence `s`.
    pub fn ix_value(&self, s: SeqId) -> f64 {
        let gamma = self.cfg.schedule.gamma;
        match self.cfg.algorithm {
            Algorithm::BalancedShannon | Algorithm::BalancedTsallis => self.ix[s],
            Algorithm::Adaptive => adaptive_ix(&self.estimator, gamma, s),
            Algorithm::Tweaked => tweaked_ix(&self.estimator, gamma, s),
            Algorithm::IxOmd => gamma,
        }
    }

    /// One learner step on this player's trajectory of an episode played
    /// with the current policy.
    pub fn observe(&mut self, traj: &Trajectory) -> Result<()> {
        let mut mass = 1.0;
        for step in &traj.steps {
            if self.tp.owner(step.seq) != step.infoset {
                return Err(Error::Structural(format!("trajectory step {step:?} is not on this treeplex")));
            }
            mass *= self.policy.0[step.seq];
            self.path_plan[step.seq] = mass;
        }
        let loss = ix_loss_estimate(traj, &self.path_plan, |s| self.ix_value(s))?;
        let transition = ix_transition_estimate(traj, &self.path_plan, |s| self.ix_value(s))?;
        self.estimator.accumulate(&self.tp, &loss, &transition);

        let decay = match self.cfg.algorithm {
            Algorithm::Adaptive => Some(RateDecay::Inverse),
            Algorithm::Tweaked => Some(RateDecay::InverseSqrt),
            _ => None,
        };
        if self.cfg.algorithm == Algorithm::BalancedTsallis {
            self.solve_tsallis()?;
            self.stats.last_touched = self.tp.num_infosets();
        } else {
            self.steps.clear();
            self.steps.extend(traj.steps.iter().zip(&loss).map(|(step, &(_, l))| TreeStep {
                infoset: step.infoset,
                action: step.action,
                loss: l,
                eta_old: self.rates[step.infoset],
                eta_new: self.rates[step.infoset],
            }));
            if let Some(decay) = decay {
                refresh_rates_along(&mut self.rates, &self.estimator, &self.tp, traj, self.cfg.schedule.eta, decay);
                for st in &mut self.steps {
                    st.eta_new = self.rates[st.infoset];
                }
            }
            fast_tree_update(&self.tp, &mut self.log_policy, &mut self.policy.0, &self.log_base, &self.steps)?;
            self.stats.last_touched = self.steps.len();
        }
        self.stats.max_touched = self.stats.max_touched.max(self.stats.last_touched);
        Ok(())
    }
}
