//! Updates regularized by a weighted dilated Shannon divergence
//! `D_eta(mu, mu0) = sum_x mu(parent(x)) / eta(x) * KL(mu(.|x) || mu0(.|x))`.
//!
//! Policies are carried in log space; the exponent of an IX loss can reach
//! `eta / gamma`, far outside the range where `exp` is safe.

use crate::error::{Error, Result};
use crate::treeplex::{BalancedKernel, BehavioralPolicy, InfoSetId, Treeplex};

pub(crate) fn logsumexp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Output of a direct solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DilatedSolution {
    pub policy: BehavioralPolicy,
    pub log_policy: Vec<f64>,
    /// Optimal value-to-go of each information set.
    pub value: Vec<f64>,
}

/// Exact minimizer of `<mu, L> + D_eta(mu, mu0)` over the treeplex, by one
/// bottom-up pass of closed-form softmax steps. `log_base` need not be
/// normalized; an all-zero base gives the plain dilated entropy.
pub fn direct_u2_solve(
    l: &[f64],
    eta: &[f64],
    log_base: &[f64],
    tp: &Treeplex,
) -> Result<DilatedSolution> {
    let ax = tp.num_sequences();
    if l.len() != ax || log_base.len() != ax || eta.len() != tp.num_infosets() {
        return Err(Error::Structural("direct solve inputs do not match the treeplex".into()));
    }
    let mut value = vec![0.0; tp.num_infosets()];
    let mut log_policy = vec![0.0; ax];
    let mut scratch = Vec::new();
    for x in (0..tp.num_infosets()).rev() {
        let e = eta[x];
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::Argument(format!("learning rate of information set {x} is {e}")));
        }
        scratch.clear();
        for s in tp.sequences(x) {
            let q = l[s] + tp.children(s).iter().map(|&y| value[y]).sum::<f64>();
            scratch.push(log_base[s] - e * q);
        }
        let z = logsumexp(&scratch);
        if !z.is_finite() {
            return Err(Error::Numeric(format!("non-finite normalizer at information set {x}")));
        }
        value[x] = -z / e;
        for (s, v) in tp.sequences(x).zip(&scratch) {
            log_policy[s] = v - z;
        }
    }
    let policy = BehavioralPolicy(log_policy.iter().map(|v| v.exp()).collect());
    Ok(DilatedSolution {
        policy,
        log_policy,
        value,
    })
}

pub fn log_of(policy: &BehavioralPolicy) -> Vec<f64> {
    policy.0.iter().map(|p| p.ln()).collect()
}

/// One own decision of the trajectory as seen by the fast update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeStep {
    pub infoset: InfoSetId,
    pub action: usize,
    /// Loss estimate of the chosen action.
    pub loss: f64,
    pub eta_old: f64,
    pub eta_new: f64,
}

/// Moves the policy from the minimizer with the old rates and cumulative loss
/// to the minimizer with the new rates and the loss of this episode added.
/// Valid when rates changed only on the trajectory. Only the trajectory's
/// information sets are rewritten, in both `log_policy` and `policy`.
pub fn fast_tree_update(
    tp: &Treeplex,
    log_policy: &mut [f64],
    policy: &mut [f64],
    log_base: &[f64],
    steps: &[TreeStep],
) -> Result<()> {
    let mut log_z_next = 0.0;
    let mut eta_next = 1.0;
    let mut scratch = Vec::new();
    for step in steps.iter().rev() {
        let x = step.infoset;
        if !(step.eta_new > 0.0 && step.eta_old > 0.0) {
            return Err(Error::Argument(format!("non-positive learning rate at information set {x}")));
        }
        let corrected = step.loss - log_z_next / eta_next;
        let alpha = step.eta_new / step.eta_old;
        let range = tp.sequences(x);
        scratch.clear();
        for (a, s) in range.clone().enumerate() {
            let mut v = alpha * log_policy[s];
            if alpha != 1.0 {
                v += (1.0 - alpha) * log_base[s];
            }
            if a == step.action {
                v -= step.eta_new * corrected;
            }
            scratch.push(v);
        }
        let log_z = logsumexp(&scratch);
        if !log_z.is_finite() {
            return Err(Error::Numeric(format!("non-finite normalizer at information set {x}")));
        }
        for (s, v) in range.zip(&scratch) {
            let lp = v - log_z;
            log_policy[s] = lp;
            policy[s] = lp.exp();
        }
        log_z_next = log_z;
        eta_next = step.eta_new;
    }
    Ok(())
}

/// Dilated form of balanced Shannon FTRL: per-information-set rates
/// `1 / (p*(x) * sum_{h'>=h} 1/eta_h')` and the anchor policy minimizing the
/// balanced entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct DilatedForm {
    pub eta_star: Vec<f64>,
    pub mu_star: BehavioralPolicy,
    pub log_mu_star: Vec<f64>,
}

pub fn balanced_to_dilated(kernel: &BalancedKernel, eta_h: &[f64], tp: &Treeplex) -> Result<DilatedForm> {
    let depth = tp.max_depth();
    if eta_h.len() < depth || eta_h[..depth].iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Argument(format!("need {depth} positive per-depth learning rates")));
    }
    let mut suffix = vec![0.0; depth + 1];
    for h in (0..depth).rev() {
        suffix[h] = suffix[h + 1] + 1.0 / eta_h[h];
    }
    let mut eta_star = vec![0.0; tp.num_infosets()];
    let mut linear = vec![0.0; tp.num_sequences()];
    for (x, rec) in tp.infosets().iter().enumerate() {
        let p = kernel.reach[x];
        eta_star[x] = 1.0 / (p * suffix[rec.depth - 1]);
        let c = p * p.ln() / eta_h[rec.depth - 1];
        linear[rec.sequences()].fill(c);
    }
    let zero = vec![0.0; tp.num_sequences()];
    let sol = direct_u2_solve(&linear, &eta_star, &zero, tp)?;
    Ok(DilatedForm {
        eta_star,
        mu_star: sol.policy,
        log_mu_star: sol.log_policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treeplex::{compute_balanced_kernel, fixtures::t1};

    fn single(k: usize) -> Treeplex {
        Treeplex::from_layout(&[(None, k)]).unwrap()
    }

    #[test]
    fn one_step_closed_form() {
        let tp = single(2);
        let base = vec![0.5f64.ln(); 2];
        let sol = direct_u2_solve(&[1.0, 0.0], &[1.0], &base, &tp).unwrap();
        let expect = (-1f64).exp() / ((-1f64).exp() + 1.0);
        assert!((sol.policy.0[0] - expect).abs() < 1e-12);
        assert!((sol.policy.0[0] - 0.26894).abs() < 1e-5);

        let mut lp = base.clone();
        let mut p = vec![0.5; 2];
        let step = TreeStep {
            infoset: 0,
            action: 0,
            loss: 1.0,
            eta_old: 1.0,
            eta_new: 1.0,
        };
        fast_tree_update(&tp, &mut lp, &mut p, &base, &[step]).unwrap();
        assert!((p[0] - expect).abs() < 1e-12 && (p[1] - (1.0 - expect)).abs() < 1e-12);
    }

    #[test]
    fn zero_loss_is_a_no_op() {
        let tp = t1();
        let base = log_of(&BehavioralPolicy::uniform(&tp));
        let mut lp = vec![0.3f64.ln(), 0.7f64.ln(), 0.0, 0.0, 0.0];
        let mut p: Vec<f64> = lp.iter().map(|v: &f64| v.exp()).collect();
        let before = p.clone();
        let steps = [
            TreeStep { infoset: 0, action: 1, loss: 0.0, eta_old: 1.0, eta_new: 1.0 },
            TreeStep { infoset: 2, action: 0, loss: 0.0, eta_old: 1.0, eta_new: 1.0 },
        ];
        fast_tree_update(&tp, &mut lp, &mut p, &base, &steps).unwrap();
        for (a, b) in p.iter().zip(&before) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn tiny_rate_stays_at_base() {
        let tp = t1();
        let base = BehavioralPolicy(vec![0.2, 0.8, 1.0, 1.0, 1.0]);
        let sol = direct_u2_solve(&[3.0, -1.0, 2.0, 5.0, 0.0], &[1e-8; 4], &log_of(&base), &tp).unwrap();
        for (a, b) in sol.policy.0.iter().zip(&base.0) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn dilated_rates_on_t1() {
        let tp = t1();
        let k = compute_balanced_kernel(&tp);
        let form = balanced_to_dilated(&k, &[1.0, 1.0], &tp).unwrap();
        assert!((form.eta_star[0] - 0.5).abs() < 1e-15);
        assert!((form.eta_star[2] - 2.0).abs() < 1e-15);

        let single = single(3);
        let k = compute_balanced_kernel(&single);
        let form = balanced_to_dilated(&k, &[0.7], &single).unwrap();
        assert!((form.eta_star[0] - 0.7).abs() < 1e-15);
        for p in &form.mu_star.0 {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }
}
