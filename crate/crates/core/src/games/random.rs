use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{GameNode, GameOptions, GameTree, Player};

struct Gen {
    rng: ChaCha8Rng,
    remaining: usize,
    branching: usize,
}

/// FNV-1a, so the action count is a pure function of the information set.
fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

impl Gen {
    fn terminal(&mut self) -> GameNode {
        // quarter-integer utilities keep the text form short
        GameNode::Terminal(self.rng.gen_range(-8i32..=8) as f64 / 4.0)
    }

    fn actions_for(&self, label: &str) -> usize {
        1 + (label_hash(label) % self.branching as u64) as usize
    }

    fn decision(&mut self, player: Player, obs: [String; 2], depth: usize, forced_min: bool) -> GameNode {
        let p = player.index();
        let label = format!("{}{}", if p == 0 { "M" } else { "m" }, obs[p]);
        let k = self.actions_for(&label);
        self.remaining = self.remaining.saturating_sub(k);
        let opponent_sees = self.rng.gen_bool(0.5);
        let children = (0..k)
            .map(|a| {
                let mut next = obs.clone();
                next[p].push_str(&format!("A{a};"));
                next[1 - p].push_str(&if opponent_sees { format!("o{a};") } else { "o;".to_string() });
                if forced_min {
                    self.decision(Player::Min, next, depth + 1, false)
                } else {
                    self.node(next, depth + 1)
                }
            })
            .collect();
        GameNode::decision(player, label, children)
    }

    fn node(&mut self, obs: [String; 2], depth: usize) -> GameNode {
        let stop = self.remaining < self.branching + 1
            || depth >= 10
            || self.rng.gen_bool((0.12 * depth as f64).min(0.9));
        if stop {
            return self.terminal();
        }
        match self.rng.gen_range(0..4) {
            0 => {
                let k = self.rng.gen_range(2..=self.branching.max(2));
                self.remaining = self.remaining.saturating_sub(k);
                let weights: Vec<f64> = (0..k).map(|_| self.rng.gen_range(0.1..1.0)).collect();
                let total: f64 = weights.iter().sum();
                let visible = [self.rng.gen_bool(0.5), self.rng.gen_bool(0.5)];
                let outcomes = weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        let mut next = obs.clone();
                        for p in 0..2 {
                            // coarsened signal: only the parity is revealed
                            next[p].push_str(&if visible[p] { format!("s{};", i % 2) } else { "s;".to_string() });
                        }
                        (w / total, self.node(next, depth + 1))
                    })
                    .collect();
                GameNode::Chance(outcomes)
            }
            1 | 2 => self.decision(Player::Max, obs, depth, false),
            _ => self.decision(Player::Min, obs, depth, false),
        }
    }
}

const LAYERED_LEAF_BUDGET: f64 = 2e6;

struct Layered {
    rng: ChaCha8Rng,
    depth: usize,
    branching: usize,
    actions: usize,
}

impl Layered {
    fn count(&self, label: &str) -> usize {
        if self.actions > 0 {
            self.actions
        } else {
            2 + (label_hash(label) % (self.branching as u64 - 1)) as usize
        }
    }

    fn decision(&mut self, player: Player, obs: [String; 2], round: usize) -> GameNode {
        let p = player.index();
        let label = format!("{}{}", if p == 0 { "M" } else { "m" }, obs[p]);
        let k = self.count(&label);
        let opponent_sees = self.rng.gen_bool(0.5);
        let children = (0..k)
            .map(|a| {
                let mut next = obs.clone();
                next[p].push_str(&format!("A{a};"));
                next[1 - p].push_str(&if opponent_sees { format!("o{a};") } else { "o;".to_string() });
                match player {
                    Player::Max => self.signal(next, round),
                    Player::Min if round + 1 == self.depth => {
                        GameNode::Terminal(self.rng.gen_range(-8i32..=8) as f64 / 4.0)
                    }
                    Player::Min => self.decision(Player::Max, next, round + 1),
                }
            })
            .collect();
        GameNode::decision(player, label, children)
    }

    fn signal(&mut self, obs: [String; 2], round: usize) -> GameNode {
        let weights: Vec<f64> = (0..self.branching).map(|_| self.rng.gen_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let visible = [self.rng.gen_bool(0.5), self.rng.gen_bool(0.5)];
        let outcomes = weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let mut next = obs.clone();
                for p in 0..2 {
                    next[p].push_str(&if visible[p] { format!("s{i};") } else { "s;".to_string() });
                }
                (w / total, self.decision(Player::Min, next, round))
            })
            .collect();
        GameNode::Chance(outcomes)
    }
}

/// Random game in which every path consists of exactly `depth` rounds of a
/// max decision, a chance signal with `branching` outcomes and a min
/// decision. `actions = 0` draws each action count from `2..=branching`.
pub fn build_random_layered(depth: usize, branching: usize, actions: usize, seed: u64) -> Result<GameTree> {
    if depth < 1 || branching < 2 || actions == 1 {
        return Err(Error::Argument(format!(
            "random_layered needs depth >= 1, branching >= 2 and actions != 1 (got {depth}, {branching}, {actions})"
        )));
    }
    let k = if actions > 0 { actions } else { branching } as f64;
    if (k * k * branching as f64).powi(depth as i32) > LAYERED_LEAF_BUDGET {
        return Err(Error::Resource(format!(
            "random_layered with depth={depth}, branching={branching}, actions={actions} is too large"
        )));
    }
    let mut gen = Layered {
        rng: ChaCha8Rng::seed_from_u64(seed),
        depth,
        branching,
        actions,
    };
    let root = gen.decision(Player::Max, [String::new(), String::new()], 0);
    GameTree::from_root(root, GameOptions::default())
}

/// Random perfect-recall game. Information sets are keyed by each player's
/// observation history (own actions, possibly hidden opponent actions and
/// coarsened chance signals). The root is a max decision followed by a min
/// decision, so both players act on every path.
pub fn build_random(budget: usize, branching: usize, seed: u64) -> Result<GameTree> {
    if budget < 2 {
        return Err(Error::Argument("random game budget must be at least 2".into()));
    }
    if branching < 2 {
        return Err(Error::Argument("random game branching must be at least 2".into()));
    }
    let mut gen = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        remaining: budget,
        branching,
    };
    let root = gen.decision(Player::Max, [String::new(), String::new()], 0, true);
    GameTree::from_root(root, GameOptions::default())
}
