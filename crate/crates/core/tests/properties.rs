use iig_core::estimators::{ix_loss_estimate, ix_transition_estimate};
use iig_core::game::{GameTree, Player};
use iig_core::games::{build_random, build_random_layered};
use iig_core::learners::{Algorithm, Learner, LearnerConfig};
use iig_core::estimators::ScheduleParams;
use iig_core::report::format_sig;
use iig_core::treeplex::{
    behavioral_to_realization, compute_balanced_kernel, kernel_from_reach, kernel_reach, realization_to_behavioral,
    BehavioralPolicy, Treeplex,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_policy(tp: &Treeplex, rng: &mut ChaCha8Rng) -> BehavioralPolicy {
    let mut p = BehavioralPolicy::uniform(tp);
    for x in 0..tp.num_infosets() {
        let r = tp.sequences(x);
        let w: Vec<f64> = r.clone().map(|_| rng.gen_range(0.001..1.0)).collect();
        let total: f64 = w.iter().sum();
        for (s, v) in r.zip(w) {
            p.0[s] = v / total;
        }
    }
    p
}

fn game(budget: usize, seed: u64) -> GameTree {
    build_random(budget, 3, seed).unwrap()
}

/// Sum over each sibling group (roots, or children of one sequence).
fn group_sums(tp: &Treeplex, step: &[f64]) -> Vec<f64> {
    let mut out = vec![tp.roots().iter().map(|&x| step[x]).sum()];
    for s in 0..tp.num_sequences() {
        let c = tp.children(s);
        if !c.is_empty() {
            out.push(c.iter().map(|&x| step[x]).sum());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn realization_plans_satisfy_flow(budget in 4usize..150, seed in 0u64..1000) {
        let g = game(budget, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in Player::BOTH {
            let tp = g.treeplex(p);
            let pol = random_policy(tp, &mut rng);
            let plan = behavioral_to_realization(&pol, tp).unwrap();
            prop_assert!(plan.flow_residual(tp).unwrap() <= 1e-12);
            let back = realization_to_behavioral(&plan, tp, &BehavioralPolicy::uniform(tp)).unwrap();
            for (a, b) in back.0.iter().zip(&pol.0) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn balanced_kernel_is_a_kernel(budget in 4usize..150, seed in 0u64..1000) {
        let g = game(budget, seed);
        for p in Player::BOTH {
            let tp = g.treeplex(p);
            let k = compute_balanced_kernel(tp);
            for s in group_sums(tp, &k.step) {
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
            // A↓ of the roots covers every sequence
            let total: usize = tp.roots().iter().map(|&x| k.subtree_actions[x]).sum();
            prop_assert_eq!(total, tp.num_sequences());
        }
    }

    #[test]
    fn balanced_identity_holds_for_folded_kernels(budget in 4usize..150, seed in 0u64..1000) {
        let g = game(budget, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for p in Player::BOTH {
            let tp = g.treeplex(p);
            let opp = g.treeplex(p.opponent());
            let nu = behavioral_to_realization(&random_policy(opp, &mut rng), opp).unwrap();
            let folded = g.folded_from_plan(p, nu.values()).unwrap();
            let step = kernel_from_reach(tp, &folded.reach);
            for s in group_sums(tp, &step) {
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
            let q = kernel_reach(tp, &step);
            let k = compute_balanced_kernel(tp);
            let total: f64 = (0..tp.num_infosets())
                .map(|x| tp.infoset(x).num_actions as f64 * q[x] / k.reach[x])
                .sum();
            let ax = tp.num_sequences() as f64;
            prop_assert!((total - ax).abs() <= 1e-9 * ax);
        }
    }

    #[test]
    fn exploitability_is_nonnegative(budget in 4usize..150, seed in 0u64..1000) {
        let g = game(budget, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_policy(g.treeplex(Player::Max), &mut rng);
        let nu = random_policy(g.treeplex(Player::Min), &mut rng);
        let e = g.exploitability(&mu, &nu).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&e));
        let v = g.expected_value(&mu, &nu).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
    }

    #[test]
    fn text_round_trip(budget in 4usize..150, seed in 0u64..1000) {
        let g = game(budget, seed);
        let back = GameTree::from_text(&g.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), g.to_text());
        for p in Player::BOTH {
            let tp = g.treeplex(p);
            prop_assert_eq!(&Treeplex::from_text(&tp.to_text()).unwrap(), tp);
        }
    }

    #[test]
    fn ix_estimates_are_bounded(seed in 0u64..1000, gamma in 0.001f64..1.0) {
        let g = build_random_layered(3, 2, 0, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pols = Player::BOTH.map(|p| random_policy(g.treeplex(p), &mut rng));
        let ep = g.sample_episode(&pols[0], &pols[1], &mut rng);
        for p in Player::BOTH {
            let tp = g.treeplex(p);
            let plan = behavioral_to_realization(&pols[p.index()], tp).unwrap();
            let traj = ep.trajectory(p);
            let loss = ix_loss_estimate(traj, plan.values(), |_| gamma).unwrap();
            let trans = ix_transition_estimate(traj, plan.values(), |_| gamma).unwrap();
            for ((s, l), (s2, t)) in loss.iter().zip(&trans) {
                prop_assert_eq!(s, s2);
                prop_assert!(*l >= 0.0 && l <= t && *t <= 1.0 / gamma);
            }
        }
    }

    #[test]
    fn format_sig_round_trips(v in prop::num::f64::NORMAL) {
        let s = format_sig(v);
        let back: f64 = s.parse().unwrap();
        prop_assert_eq!(format_sig(back), s.clone());
        prop_assert!(((back - v) / v).abs() <= 5e-10, "{} -> {}", v, s);
        prop_assert!(!s.contains(','));
    }

    #[test]
    fn learners_keep_valid_policies(seed in 0u64..200, algo_idx in 0usize..5) {
        let algo = Algorithm::ALL[algo_idx];
        let g = game(60, seed);
        let mut learners = Player::BOTH.map(|p| {
            let tp = g.treeplex_arc(p);
            let sched = ScheduleParams::manual(0.7, 0.05, tp.max_depth()).unwrap();
            Learner::new(tp, LearnerConfig::new(algo, sched)).unwrap()
        });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..30 {
            let ep = g.sample_episode(learners[0].policy(), learners[1].policy(), &mut rng);
            learners[0].observe(&ep.max).unwrap();
            learners[1].observe(&ep.min).unwrap();
        }
        for l in &learners {
            prop_assert!(l.policy().validate(l.treeplex(), 1e-9).is_ok());
            prop_assert!(l.policy().0.iter().all(|&v| v > 0.0));
            prop_assert!(l.stats().max_gap <= 1e-8);
        }
    }
}
