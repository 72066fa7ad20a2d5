//! Importance-weighted estimates built from a single trajectory, their
//! running sums, and the rate schedules that depend on them.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::game::Trajectory;
use crate::treeplex::{BalancedKernel, InfoSetId, SeqId, SequenceVector, Treeplex};

/// Nonzero entries of a sequence vector, in trajectory order.
pub type SparseVector = Vec<(SeqId, f64)>;

fn ix_estimate(
    traj: &Trajectory,
    plan: &[f64],
    gamma_of: impl Fn(SeqId) -> f64,
    numerator: impl Fn(f64) -> f64,
) -> Result<SparseVector> {
    traj.steps
        .iter()
        .map(|step| {
            let denom = plan[step.seq] + gamma_of(step.seq);
            if !(denom > 0.0) {
                return Err(Error::Numeric(format!(
                    "zero IX denominator on visited sequence {}",
                    step.seq
                )));
            }
            Ok((step.seq, numerator(step.reward) / denom))
        })
        .collect()
}

/// `(1 - r_h) / (plan(x_h, a_h) + gamma)` on each visited sequence.
pub fn ix_loss_estimate(
    traj: &Trajectory,
    plan: &[f64],
    gamma_of: impl Fn(SeqId) -> f64,
) -> Result<SparseVector> {
    ix_estimate(traj, plan, gamma_of, |r| 1.0 - r)
}

/// `1 / (plan(x_h, a_h) + gamma)` on each visited sequence.
pub fn ix_transition_estimate(
    traj: &Trajectory,
    plan: &[f64],
    gamma_of: impl Fn(SeqId) -> f64,
) -> Result<SparseVector> {
    ix_estimate(traj, plan, gamma_of, |_| 1.0)
}

/// Cumulative estimates for one learner.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub l_tilde: SequenceVector,
    pub p_tilde: SequenceVector,
    /// Per information set, the mean of `p_tilde` over its actions.
    pub p_tilde_infoset: Vec<f64>,
    pub t: usize,
}

impl EstimatorState {
    pub fn new(tp: &Treeplex) -> Self {
        Self {
            l_tilde: SequenceVector::zeros(tp),
            p_tilde: SequenceVector::zeros(tp),
            p_tilde_infoset: vec![0.0; tp.num_infosets()],
            t: 0,
        }
    }

    /// Adds one episode's sparse estimates.
    pub fn accumulate(&mut self, tp: &Treeplex, loss: &[(SeqId, f64)], transition: &[(SeqId, f64)]) {
        for &(s, v) in loss {
            self.l_tilde[s] += v;
        }
        for &(s, v) in transition {
            self.p_tilde[s] += v;
            let x = tp.owner(s);
            self.p_tilde_infoset[x] += v / tp.infoset(x).num_actions as f64;
        }
        self.t += 1;
    }
}

/// `gamma_h / p*_{1:h}(x)` broadcast to the sequences of `x`. `gamma_h` is
/// indexed by depth minus one.
pub fn balanced_ix_params(kernel: &BalancedKernel, gamma_h: &[f64], tp: &Treeplex) -> Result<SequenceVector> {
    if gamma_h.len() < tp.max_depth() {
        return Err(Error::Argument(format!(
            "need {} per-depth IX values, got {}",
            tp.max_depth(),
            gamma_h.len()
        )));
    }
    let mut out = SequenceVector::zeros(tp);
    for (x, rec) in tp.infosets().iter().enumerate() {
        let g = gamma_h[rec.depth - 1] / kernel.reach[x];
        out[rec.sequences()].fill(g);
    }
    Ok(out)
}

/// `gamma / (1 + P(x, a))` for one sequence.
pub fn adaptive_ix(state: &EstimatorState, gamma: f64, s: SeqId) -> f64 {
    gamma / (1.0 + state.p_tilde[s])
}

/// `gamma / sqrt(1 + P(x, a))` for one sequence.
pub fn tweaked_ix(state: &EstimatorState, gamma: f64, s: SeqId) -> f64 {
    gamma / (1.0 + state.p_tilde[s]).sqrt()
}

pub fn adaptive_ix_params(state: &EstimatorState, gamma: f64) -> SequenceVector {
    SequenceVector((0..state.p_tilde.len()).map(|s| adaptive_ix(state, gamma, s)).collect())
}

/// How the per-information-set rate shrinks with the estimated transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateDecay {
    /// `eta / (1 + P)`
    Inverse,
    /// `eta / sqrt(1 + P)`
    InverseSqrt,
}

impl RateDecay {
    pub fn apply(self, eta: f64, p: f64) -> f64 {
        match self {
            RateDecay::Inverse => eta / (1.0 + p),
            RateDecay::InverseSqrt => eta / (1.0 + p).sqrt(),
        }
    }
}

fn subtree_min_rate(
    tp: &Treeplex,
    state: &EstimatorState,
    rates: &[f64],
    eta: f64,
    decay: RateDecay,
    x: InfoSetId,
) -> f64 {
    let mut r = decay.apply(eta, state.p_tilde_infoset[x]);
    for s in tp.sequences(x) {
        for &y in tp.children(s) {
            r = r.min(rates[y]);
        }
    }
    r
}

/// Per information set, the minimum of `decay(eta, P(x'))` over `x` and all
/// of its descendants, by one bottom-up pass.
pub fn monotone_rates(state: &EstimatorState, tp: &Treeplex, eta: f64, decay: RateDecay) -> Vec<f64> {
    let mut rates = vec![0.0; tp.num_infosets()];
    for x in (0..tp.num_infosets()).rev() {
        rates[x] = subtree_min_rate(tp, state, &rates, eta, decay, x);
    }
    rates
}

/// Recomputes the rates of the trajectory's information sets, deepest
/// first. Only these can change after an episode, since only their
/// subtrees received new estimates.
pub fn refresh_rates_along(
    rates: &mut [f64],
    state: &EstimatorState,
    tp: &Treeplex,
    traj: &Trajectory,
    eta: f64,
    decay: RateDecay,
) {
    for step in traj.steps.iter().rev() {
        rates[step.infoset] = subtree_min_rate(tp, state, rates, eta, decay, step.infoset);
    }
}

pub fn adaptive_learning_rates(state: &EstimatorState, tp: &Treeplex, eta: f64) -> Vec<f64> {
    monotone_rates(state, tp, eta, RateDecay::Inverse)
}

/// Rates `eta / sqrt(1 + P(x))` (monotonized like the adaptive rates) and
/// IX values `gamma / sqrt(1 + P(x, a))`.
pub fn tweaked_schedule(state: &EstimatorState, tp: &Treeplex, eta: f64, gamma: f64) -> (Vec<f64>, SequenceVector) {
    let rates = monotone_rates(state, tp, eta, RateDecay::InverseSqrt);
    let ix = SequenceVector((0..state.p_tilde.len()).map(|s| tweaked_ix(state, gamma, s)).collect());
    (rates, ix)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    TheoremBalancedTsallis,
    TheoremBalancedShannon,
    FixedActionSet,
    Adaptive,
    Tweaked,
    Manual,
}

impl ScheduleMode {
    pub fn name(self) -> &'static str {
        match self {
            ScheduleMode::TheoremBalancedTsallis => "theorem-balanced-tsallis",
            ScheduleMode::TheoremBalancedShannon => "theorem-balanced-shannon",
            ScheduleMode::FixedActionSet => "fixed-action-set",
            ScheduleMode::Adaptive => "adaptive",
            ScheduleMode::Tweaked => "tweaked",
            ScheduleMode::Manual => "manual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleInputs {
    /// Maximum own depth `H`.
    pub depth: usize,
    /// Number of sequences `AX`.
    pub num_sequences: usize,
    pub episodes: usize,
    pub delta: f64,
    /// Tsallis exponent, used by the Tsallis mode only.
    pub tsallis_q: f64,
    /// Constant action count, required by the fixed-action-set mode.
    pub actions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleParams {
    pub mode: ScheduleMode,
    /// Global learning rate (adaptive and manual modes).
    pub eta: f64,
    /// Global IX base (adaptive and manual modes).
    pub gamma: f64,
    pub iota: f64,
    pub iota_prime: f64,
    pub l2: f64,
    /// Per-depth rates, indexed by depth minus one.
    pub eta_h: Vec<f64>,
    pub gamma_h: Vec<f64>,
}

impl ScheduleParams {
    /// Manual schedule: the same `eta` and `gamma` at every depth.
    pub fn manual(eta: f64, gamma: f64, depth: usize) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) || !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Argument(format!(
                "need eta > 0 and gamma >= 0, got eta={eta}, gamma={gamma}"
            )));
        }
        Ok(Self {
            mode: ScheduleMode::Manual,
            eta,
            gamma,
            iota: f64::NAN,
            iota_prime: f64::NAN,
            l2: f64::NAN,
            eta_h: vec![eta; depth],
            gamma_h: vec![gamma; depth],
        })
    }

    /// Human-readable table of the schedule.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode        {}", self.mode.name());
        let _ = writeln!(out, "eta         {:.6e}", self.eta);
        let _ = writeln!(out, "gamma       {:.6e}", self.gamma);
        let _ = writeln!(out, "iota        {:.6}", self.iota);
        let _ = writeln!(out, "iota_prime  {:.6}", self.iota_prime);
        let _ = writeln!(out, "L2          {:.6}", self.l2);
        if !self.eta_h.is_empty() {
            let _ = writeln!(out, "depth  eta_h          gamma_h");
            for (h, (e, g)) in self.eta_h.iter().zip(&self.gamma_h).enumerate() {
                let _ = writeln!(out, "{:<6} {:<14.6e} {:.6e}", h + 1, e, g);
            }
        }
        out
    }
}

/// `1 + log2(1 + T)`.
pub fn l2_constant(episodes: usize) -> f64 {
    1.0 + (1.0 + episodes as f64).log2()
}

/// Learning and IX rates prescribed by the regret theorems.
pub fn theorem_schedules(mode: ScheduleMode, inp: &ScheduleInputs) -> Result<ScheduleParams> {
    let ScheduleInputs {
        depth,
        num_sequences,
        episodes,
        delta,
        tsallis_q,
        actions,
    } = *inp;
    if depth == 0 || num_sequences == 0 {
        return Err(Error::Argument("schedule needs H >= 1 and AX >= 1".into()));
    }
    if episodes == 0 {
        return Err(Error::Argument("schedule needs T >= 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Argument(format!("delta must lie in (0, 1), got {delta}")));
    }
    let h = depth as f64;
    let ax = num_sequences as f64;
    let t = episodes as f64;
    let iota = (3.0 * ax / delta).ln();
    let iota_prime = (3.0 * ax * t / delta).ln();
    let l2 = l2_constant(episodes);
    let mut params = ScheduleParams {
        mode,
        eta: f64::NAN,
        gamma: f64::NAN,
        iota,
        iota_prime,
        l2,
        eta_h: Vec::new(),
        gamma_h: Vec::new(),
    };
    let gamma_balanced = (h * iota / (2.0 * ax * t)).sqrt();
    match mode {
        ScheduleMode::TheoremBalancedShannon => {
            let eta = (2.0 * h * ax.ln() / (ax * t)).sqrt();
            params.eta_h = vec![eta; depth];
            params.gamma_h = vec![gamma_balanced; depth];
        }
        ScheduleMode::TheoremBalancedTsallis => {
            if !(tsallis_q > 0.0 && tsallis_q < 1.0) {
                return Err(Error::Argument(format!(
                    "Tsallis exponent must lie in (0, 1), got {tsallis_q}"
                )));
            }
            let q = tsallis_q;
            let eta = (2.0 * q * (1.0 - q) / t).sqrt() * (h / ax).powf(q - 0.5);
            params.eta_h = vec![eta; depth];
            params.gamma_h = vec![gamma_balanced; depth];
        }
        ScheduleMode::FixedActionSet => {
            let a = actions.ok_or_else(|| {
                Error::Argument("the fixed-action-set schedule needs a constant action count".into())
            })? as f64;
            for d in 1..=depth {
                let w = a.powi((depth - d) as i32);
                params.eta_h.push((2.0 * w * ax.ln() / (ax * t)).sqrt());
                params.gamma_h.push((w * iota / (2.0 * ax * t)).sqrt());
            }
        }
        ScheduleMode::Adaptive => {
            params.eta = 2.0 * (iota_prime * t / (l2 * ax)).sqrt();
            params.gamma = (2.0 * iota_prime * h * t / (l2 * ax)).sqrt();
        }
        ScheduleMode::Tweaked | ScheduleMode::Manual => {
            return Err(Error::Argument(format!(
                "no theorem schedule exists for mode {}",
                mode.name()
            )))
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Step;
    use crate::treeplex::compute_balanced_kernel;

    fn step(seq: SeqId, reward: f64) -> Step {
        Step {
            infoset: 0,
            action: seq,
            seq,
            reward,
        }
    }

    #[test]
    fn ix_arithmetic() {
        let traj = Trajectory {
            steps: vec![step(0, 0.25)],
        };
        let plan = [0.5, 0.5];
        let l = ix_loss_estimate(&traj, &plan, |_| 0.1).unwrap();
        assert_eq!(l, vec![(0, 1.25)]);
        let p = ix_transition_estimate(&traj, &[0.25, 0.75], |_| 0.25).unwrap();
        assert_eq!(p, vec![(0, 2.0)]);
        assert!(matches!(
            ix_loss_estimate(&traj, &[0.0, 1.0], |_| 0.0),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn balanced_ix_on_t1() {
        let tp = crate::treeplex::fixtures::t1();
        let k = compute_balanced_kernel(&tp);
        let g = balanced_ix_params(&k, &[0.1, 0.1], &tp).unwrap();
        assert!((g[tp.seq(2, 0)] - 0.2).abs() < 1e-15);
        assert!((g[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn adaptive_values() {
        let tp = crate::treeplex::fixtures::t1();
        let mut st = EstimatorState::new(&tp);
        assert!(adaptive_ix_params(&st, 0.3).iter().all(|&v| v == 0.3));
        assert!(adaptive_learning_rates(&st, &tp, 2.0).iter().all(|&v| v == 2.0));
        st.p_tilde[0] = 4.0;
        assert_eq!(adaptive_ix(&st, 10.0, 0), 2.0);
        // descendant with P = 9 caps the root
        st.p_tilde_infoset[2] = 9.0;
        let rates = adaptive_learning_rates(&st, &tp, 10.0);
        assert_eq!(rates[0], 1.0);
        assert_eq!(rates[1], 10.0);
        st.p_tilde_infoset[1] = 3.0;
        let (tw, _) = tweaked_schedule(&st, &tp, 10.0, 1.0);
        assert_eq!(tw[1], 5.0);
    }

    #[test]
    fn schedule_numbers() {
        let inp = ScheduleInputs {
            depth: 2,
            num_sequences: 12,
            episodes: 10_000,
            delta: 0.1,
            tsallis_q: 0.5,
            actions: Some(1),
        };
        let s = theorem_schedules(ScheduleMode::TheoremBalancedShannon, &inp).unwrap();
        assert!((s.iota - 360f64.ln()).abs() < 1e-12);
        assert!((s.gamma_h[0] - 7.003e-3).abs() < 1e-6);
        assert!((s.eta_h[1] - 9.101e-3).abs() < 1e-6);
        let f = theorem_schedules(ScheduleMode::FixedActionSet, &inp).unwrap();
        assert_eq!(f.gamma_h[0], f.gamma_h[1]);
        for (t, l2) in [(1, 2.0), (3, 3.0), (7, 4.0)] {
            assert_eq!(l2_constant(t), l2);
        }
        assert!(matches!(
            theorem_schedules(ScheduleMode::Tweaked, &inp),
            Err(Error::Argument(_))
        ));
    }
}
