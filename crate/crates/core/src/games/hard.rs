use crate::error::{Error, Result};
use crate::game::{GameNode, GameOptions, GameTree, Player, UtilityScale};

/// Largest node count the hard-instance builders will produce.
pub const HARD_NODE_BUDGET: usize = 4_000_000;

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Argument(format!("delta must lie in (0, 0.5), got {delta}")));
    }
    Ok(())
}

fn min_dummy(child: GameNode) -> GameNode {
    GameNode::decision(Player::Min, "pass", vec![child])
}

/// Bernoulli means of the variable-action instance; arms are 1-based.
pub fn hard_variable_means(k: usize, delta: f64, star: usize) -> Vec<f64> {
    (1..=k).map(|j| if j == star { 0.5 + delta } else { 0.5 }).collect()
}

/// Bandit-like instance with an information-set-dependent action space.
///
/// Chance draws `K` independent Bernoulli bits; the max player, without
/// seeing them, picks an arm at its first decision and then walks a forced
/// chain of `H - 1` single-action decisions. Every one of its `H` steps pays
/// the chosen arm's bit. The min player only has a single forced move.
pub fn build_hard_variable(k: usize, h: usize, delta: f64, star: usize) -> Result<GameTree> {
    if k < 2 || h < 1 || star > k {
        return Err(Error::Argument(format!(
            "hard_var needs K >= 2, H >= 1 and 0 <= star <= K (got K={k}, H={h}, star={star})"
        )));
    }
    check_delta(delta)?;
    if k > 20 || (1usize << k).saturating_mul(k * (h + 1)) > HARD_NODE_BUDGET {
        return Err(Error::Resource(format!("hard_var with K={k}, H={h} is too large")));
    }
    let means = hard_variable_means(k, delta, star);
    let arm_tail = |arm: usize, bit: bool| {
        let mut node = GameNode::Terminal(if bit { h as f64 } else { 0.0 });
        for step in (2..=h).rev() {
            node = GameNode::decision(Player::Max, format!("arm{}:{step}", arm + 1), vec![node]);
        }
        node
    };
    let mut outcomes = Vec::with_capacity(1 << k);
    for bits in 0..(1usize << k) {
        let mut p = 1.0;
        for (j, &m) in means.iter().enumerate() {
            p *= if bits >> j & 1 == 1 { m } else { 1.0 - m };
        }
        let arms = (0..k).map(|j| arm_tail(j, bits >> j & 1 == 1)).collect();
        outcomes.push((p, GameNode::decision(Player::Max, "choose", arms)));
    }
    let options = GameOptions {
        scale: Some(UtilityScale::new(0.0, h as f64)?),
        loss_span: [h, 1],
    };
    GameTree::from_root(min_dummy(GameNode::Chance(outcomes)), options)
}

/// Bernoulli mean of leaf action `leaf` (1-based, lexicographic order).
pub fn hard_fixed_mean(delta: f64, star: usize, leaf: usize) -> f64 {
    if leaf == star {
        0.5 + delta
    } else {
        0.5
    }
}

/// Instance with a constant action count: a full `A`-ary tree of depth `H`
/// of max decisions with deterministic transitions, where each of the `A^H`
/// leaf actions pays a Bernoulli reward.
pub fn build_hard_fixed(a: usize, h: usize, delta: f64, star: usize) -> Result<GameTree> {
    if a < 2 || h < 1 {
        return Err(Error::Argument(format!("hard_fixed needs A >= 2 and H >= 1 (got A={a}, H={h})")));
    }
    check_delta(delta)?;
    let leaves = (a as u128).checked_pow(h as u32).unwrap_or(u128::MAX);
    if leaves.saturating_mul(4) > HARD_NODE_BUDGET as u128 {
        return Err(Error::Resource(format!("hard_fixed with A={a}, H={h} is too large")));
    }
    let leaves = leaves as usize;
    if star > leaves {
        return Err(Error::Argument(format!("star must lie in 0..={leaves}, got {star}")));
    }
    fn subtree(
        a: usize,
        depth: usize,
        h: usize,
        path: &mut String,
        next_leaf: &mut usize,
        delta: f64,
        star: usize,
    ) -> GameNode {
        let label = format!("n{path}");
        let children = (0..a)
            .map(|act| {
                if depth == h {
                    *next_leaf += 1;
                    let m = hard_fixed_mean(delta, star, *next_leaf);
                    GameNode::Chance(vec![(m, GameNode::Terminal(1.0)), (1.0 - m, GameNode::Terminal(0.0))])
                } else {
                    let len = path.len();
                    path.push_str(&format!("{act}."));
                    let node = subtree(a, depth + 1, h, path, next_leaf, delta, star);
                    path.truncate(len);
                    node
                }
            })
            .collect();
        GameNode::decision(Player::Max, label, children)
    }
    let mut next_leaf = 0;
    let root = subtree(a, 1, h, &mut String::new(), &mut next_leaf, delta, star);
    let options = GameOptions {
        scale: Some(UtilityScale::new(0.0, 1.0)?),
        ..GameOptions::default()
    };
    GameTree::from_root(min_dummy(root), options)
}
