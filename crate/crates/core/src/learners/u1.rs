//! Solvers for the balanced update
//! `argmin_mu <mu, L> + sum_h Psi_h(p* mu_h) / eta_h` over the realization
//! polytope, with Tsallis or Shannon `Psi_h`.

use crate::error::{Error, Result};
use crate::treeplex::{
    best_sequence_response, realization_to_behavioral, BalancedKernel, BehavioralPolicy, RealizationPlan,
    Treeplex,
};

/// Smallest coordinate used when evaluating derivatives at the boundary.
const COORD_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    Shannon,
    /// `-sum w^q`, `q` in `(0, 1)`.
    Tsallis { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TsallisSolver {
    #[default]
    Newton,
    AwayStepFrankWolfe,
}

impl TsallisSolver {
    pub fn name(self) -> &'static str {
        match self {
            TsallisSolver::Newton => "newton",
            TsallisSolver::AwayStepFrankWolfe => "afw",
        }
    }
}

/// Separable objective `sum_s L_s mu_s + k_s phi(w_s mu_s)`.
#[derive(Debug, Clone)]
pub struct U1Problem<'a> {
    tp: &'a Treeplex,
    loss: &'a [f64],
    /// `p*` of the owning information set.
    weight: Vec<f64>,
    /// `1 / eta_h` of the owning depth.
    inv_eta: Vec<f64>,
    reg: Regularizer,
}

impl<'a> U1Problem<'a> {
    pub fn new(
        tp: &'a Treeplex,
        loss: &'a [f64],
        kernel: &BalancedKernel,
        eta_h: &[f64],
        reg: Regularizer,
    ) -> Result<Self> {
        if loss.len() != tp.num_sequences() || kernel.reach.len() != tp.num_infosets() {
            return Err(Error::Structural("balanced update inputs do not match the treeplex".into()));
        }
        if eta_h.len() < tp.max_depth() || eta_h.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Argument(format!("need {} positive per-depth learning rates", tp.max_depth())));
        }
        if let Regularizer::Tsallis { q } = reg {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::Argument(format!("Tsallis exponent must lie in (0, 1), got {q}")));
            }
        }
        let mut weight = vec![0.0; tp.num_sequences()];
        let mut inv_eta = vec![0.0; tp.num_sequences()];
        for (x, rec) in tp.infosets().iter().enumerate() {
            weight[rec.sequences()].fill(kernel.reach[x]);
            inv_eta[rec.sequences()].fill(1.0 / eta_h[rec.depth - 1]);
        }
        Ok(Self {
            tp,
            loss,
            weight,
            inv_eta,
            reg,
        })
    }

    pub fn value(&self, mu: &[f64]) -> f64 {
        let mut total = 0.0;
        for s in 0..mu.len() {
            let m = mu[s];
            let wm = self.weight[s] * m;
            let phi = match self.reg {
                Regularizer::Shannon if wm > 0.0 => wm * wm.ln(),
                Regularizer::Shannon => 0.0,
                Regularizer::Tsallis { q } => -wm.max(0.0).powf(q),
            };
            total += self.loss[s] * m + self.inv_eta[s] * phi;
        }
        total
    }

    pub fn gradient(&self, mu: &[f64], out: &mut [f64]) {
        for s in 0..mu.len() {
            let m = mu[s].max(COORD_FLOOR);
            let (w, k) = (self.weight[s], self.inv_eta[s]);
            let d = match self.reg {
                Regularizer::Shannon => k * w * ((w * m).ln() + 1.0),
                Regularizer::Tsallis { q } => -k * q * w.powf(q) * m.powf(q - 1.0),
            };
            out[s] = self.loss[s] + d;
        }
    }

    fn hessian(&self, mu: &[f64], out: &mut [f64]) {
        for s in 0..mu.len() {
            let m = mu[s].max(COORD_FLOOR);
            let (w, k) = (self.weight[s], self.inv_eta[s]);
            out[s] = match self.reg {
                Regularizer::Shannon => k * w / m,
                Regularizer::Tsallis { q } => k * q * (1.0 - q) * w.powf(q) * m.powf(q - 2.0),
            };
        }
    }

    /// Frank-Wolfe gap `<grad, mu - s>` with `s` the best vertex.
    pub fn gap(&self, mu: &[f64], grad: &[f64]) -> Result<f64> {
        let (_, best) = best_sequence_response(grad, self.tp)?;
        let at: f64 = mu.iter().zip(grad).map(|(m, g)| m * g).sum();
        Ok(at - best)
    }

    pub fn treeplex(&self) -> &Treeplex {
        self.tp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct U1Solution {
    pub plan: RealizationPlan,
    pub policy: BehavioralPolicy,
    pub gap: f64,
    pub iterations: usize,
}

fn uniform_plan(tp: &Treeplex) -> Vec<f64> {
    let mut plan = vec![0.0; tp.num_sequences()];
    for rec in tp.infosets() {
        let mass = rec.parent.map_or(1.0, |s| plan[s]);
        let share = mass / rec.num_actions as f64;
        plan[rec.sequences()].fill(share);
    }
    plan
}

fn check_start(tp: &Treeplex, warm: Option<&[f64]>) -> Vec<f64> {
    match warm {
        Some(w) if w.len() == tp.num_sequences() && w.iter().all(|&v| v > 0.0 && v.is_finite()) => w.to_vec(),
        _ => uniform_plan(tp),
    }
}

fn finish(problem: &U1Problem, mu: Vec<f64>, gap: f64, iterations: usize) -> Result<U1Solution> {
    let tp = problem.tp;
    let plan = RealizationPlan::from_values(mu);
    let policy = realization_to_behavioral(&plan, tp, &BehavioralPolicy::uniform(tp))?;
    Ok(U1Solution {
        plan,
        policy,
        gap,
        iterations,
    })
}

/// Newton direction for `min g.d + d'Hd/2` subject to the flow constraints,
/// by eliminating subtrees bottom-up and assigning top-down.
fn newton_direction(tp: &Treeplex, grad: &[f64], hess: &[f64], dir: &mut [f64]) {
    let nx = tp.num_infosets();
    let ns = tp.num_sequences();
    let mut eff_h = hess.to_vec();
    let mut eff_g = grad.to_vec();
    let mut sum_inv = vec![0.0; nx];
    let mut sum_ratio = vec![0.0; nx];
    for x in (0..nx).rev() {
        let (mut si, mut sg) = (0.0, 0.0);
        for s in tp.sequences(x) {
            for &y in tp.children(s) {
                eff_h[s] += 1.0 / sum_inv[y];
                eff_g[s] += sum_ratio[y] / sum_inv[y];
            }
            si += 1.0 / eff_h[s];
            sg += eff_g[s] / eff_h[s];
        }
        sum_inv[x] = si;
        sum_ratio[x] = sg;
    }
    debug_assert_eq!(dir.len(), ns);
    for (x, rec) in tp.infosets().iter().enumerate() {
        let m = rec.parent.map_or(0.0, |s| dir[s]);
        let lambda = -(m + sum_ratio[x]) / sum_inv[x];
        for s in rec.sequences() {
            dir[s] = -(eff_g[s] + lambda) / eff_h[s];
        }
    }
}

/// Damped Newton with a tree-structured step. Converges quadratically; used
/// as the reference solver and as the default Tsallis solver.
pub fn solve_u1_newton(problem: &U1Problem, warm: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<U1Solution> {
    let tp = problem.tp;
    let ns = tp.num_sequences();
    let mut mu = check_start(tp, warm);
    let mut grad = vec![0.0; ns];
    let mut hess = vec![0.0; ns];
    let mut dir = vec![0.0; ns];
    let mut trial = vec![0.0; ns];
    let mut gap = f64::INFINITY;
    for it in 0..max_iter {
        problem.gradient(&mu, &mut grad);
        gap = problem.gap(&mu, &grad)?;
        if gap <= tol {
            return finish(problem, mu, gap, it);
        }
        problem.hessian(&mu, &mut hess);
        newton_direction(tp, &grad, &hess, &mut dir);
        // dHd rather than -g.d: the latter cancels to rounding noise near
        // the optimum while the gap is still far above tolerance
        let decrement: f64 = dir.iter().zip(&hess).map(|(d, h)| d * d * h).sum();
        if !decrement.is_finite() {
            return Err(Error::Numeric(format!("non-finite Newton step (gap {gap:.3e})")));
        }
        let mut step = 1.0f64;
        for s in 0..ns {
            if dir[s] < 0.0 {
                step = step.min(-0.99 * mu[s] / dir[s]);
            }
        }
        if decrement < 1e-10 && step >= 1.0 {
            for s in 0..ns {
                trial[s] = mu[s] + dir[s];
            }
            let mut g2 = vec![0.0; ns];
            problem.gradient(&trial, &mut g2);
            if problem.gap(&trial, &g2)? >= gap {
                break;
            }
        } else {
            let f0 = problem.value(&mu);
            let mut accepted = false;
            while step > 1e-16 {
                for s in 0..ns {
                    trial[s] = mu[s] + step * dir[s];
                }
                if trial.iter().all(|&v| v > 0.0) && problem.value(&trial) <= f0 - 1e-4 * step * decrement {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        std::mem::swap(&mut mu, &mut trial);
    }
    problem.gradient(&mu, &mut grad);
    gap = gap.min(problem.gap(&mu, &grad)?);
    if gap <= tol {
        return finish(problem, mu, gap, max_iter);
    }
    Err(Error::Numeric(format!("Newton solver stalled with duality gap {gap:.3e} > {tol:.1e}")))
}

/// Frank-Wolfe with away steps over the realization polytope. The active set
/// holds visited vertices plus the starting point.
pub fn solve_u1_afw(problem: &U1Problem, warm: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<U1Solution> {
    let tp = problem.tp;
    let ns = tp.num_sequences();
    let mut mu = check_start(tp, warm);
    let mut atoms: Vec<(Vec<f64>, f64)> = vec![(mu.clone(), 1.0)];
    let mut grad = vec![0.0; ns];
    let mut dir = vec![0.0; ns];
    let mut probe = vec![0.0; ns];
    let mut pg = vec![0.0; ns];
    for it in 0..max_iter {
        problem.gradient(&mu, &mut grad);
        let (vertex, best) = best_sequence_response(&grad, tp)?;
        let at: f64 = mu.iter().zip(&grad).map(|(m, g)| m * g).sum();
        let gap = at - best;
        if gap <= tol {
            return finish(problem, mu, gap, it);
        }
        let (away, away_val) = atoms
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (i, v.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>()))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        let fw_slope = best - at;
        let away_slope = at - away_val;
        let use_fw = fw_slope <= away_slope || atoms.len() == 1 && atoms[0].1 >= 1.0;
        let vertex = vertex.0 .0;
        let max_step = if use_fw {
            for s in 0..ns {
                dir[s] = vertex[s] - mu[s];
            }
            1.0
        } else {
            for s in 0..ns {
                dir[s] = mu[s] - atoms[away].0[s];
            }
            let a = atoms[away].1;
            a / (1.0 - a)
        };
        // bisection on the directional derivative, which is monotone
        let deriv = |t: f64, probe: &mut [f64], pg: &mut [f64]| {
            for s in 0..ns {
                probe[s] = (mu[s] + t * dir[s]).max(0.0);
            }
            problem.gradient(probe, pg);
            pg.iter().zip(dir.iter()).map(|(g, d)| g * d).sum::<f64>()
        };
        let step = if deriv(max_step, &mut probe, &mut pg) <= 0.0 {
            max_step
        } else {
            let (mut lo, mut hi) = (0.0, max_step);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if deriv(mid, &mut probe, &mut pg) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 * max_step {
                    break;
                }
            }
            lo
        };
        if step <= 0.0 {
            return Err(Error::Numeric(format!("Frank-Wolfe stalled with duality gap {gap:.3e}")));
        }
        for s in 0..ns {
            mu[s] = (mu[s] + step * dir[s]).max(0.0);
        }
        if use_fw {
            for atom in &mut atoms {
                atom.1 *= 1.0 - step;
            }
            match atoms.iter_mut().find(|(v, _)| *v == vertex) {
                Some(atom) => atom.1 += step,
                None => atoms.push((vertex, step)),
            }
        } else {
            for atom in &mut atoms {
                atom.1 *= 1.0 + step;
            }
            atoms[away].1 -= step;
        }
        atoms.retain(|(_, w)| *w > 1e-14);
    }
    problem.gradient(&mu, &mut grad);
    let gap = problem.gap(&mu, &grad)?;
    Err(Error::Numeric(format!(
        "Frank-Wolfe hit the iteration cap {max_iter} with duality gap {gap:.3e} > {tol:.1e}"
    )))
}

pub const TSALLIS_MAX_ITER: usize = 100_000;

/// Balanced Tsallis update. Returns the full solution so callers can warm
/// start the next solve from `plan`.
pub fn tsallis_u1_solution(
    l_tilde: &[f64],
    kernel: &BalancedKernel,
    eta_h: &[f64],
    tau: f64,
    tp: &Treeplex,
    tol: f64,
    solver: TsallisSolver,
    warm: Option<&[f64]>,
) -> Result<U1Solution> {
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let problem = U1Problem::new(tp, l_tilde, kernel, eta_h, Regularizer::Tsallis { q: tau })?;
    match solver {
        TsallisSolver::Newton => solve_u1_newton(&problem, warm, tol, 500),
        TsallisSolver::AwayStepFrankWolfe => solve_u1_afw(&problem, warm, tol, TSALLIS_MAX_ITER),
    }
}

pub fn tsallis_u1_solve(
    l_tilde: &[f64],
    kernel: &BalancedKernel,
    eta_h: &[f64],
    tau: f64,
    tp: &Treeplex,
    tol: f64,
) -> Result<BehavioralPolicy> {
    Ok(tsallis_u1_solution(l_tilde, kernel, eta_h, tau, tp, tol, TsallisSolver::default(), None)?.policy)
}

/// Balanced Shannon update solved directly in the realization space. Slow;
/// serves as an oracle for the dilated form.
pub fn shannon_u1_solve(
    l_tilde: &[f64],
    kernel: &BalancedKernel,
    eta_h: &[f64],
    tp: &Treeplex,
    tol: f64,
) -> Result<U1Solution> {
    let problem = U1Problem::new(tp, l_tilde, kernel, eta_h, Regularizer::Shannon)?;
    solve_u1_newton(&problem, None, tol, 500)
}
