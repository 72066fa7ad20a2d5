//! Benchmark game builders and the `name:key=value,...` game spec strings.

mod hard;
mod kuhn;
mod leduc;
mod liars_dice;
mod random;

use std::fmt;
use std::str::FromStr;

pub use hard::{build_hard_fixed, build_hard_variable, hard_fixed_mean, hard_variable_means};
pub use kuhn::build_kuhn;
pub use leduc::{build_leduc, LeducConfig};
pub use liars_dice::{build_liars_dice, LiarsDiceConfig, LIARS_DICE_TARGET_AX};
pub use random::{build_random, build_random_layered};

use crate::error::{Error, Result};
use crate::game::{GameNode, GameOptions, GameTree, Player};

pub const GAME_NAMES: [&str; 8] = [
    "kuhn",
    "leduc",
    "liars_dice",
    "hard_var",
    "hard_fixed",
    "matching_pennies",
    "random",
    "random_layered",
];

/// Max picks heads or tails, min guesses without seeing it; max wins on a
/// match.
pub fn build_matching_pennies() -> Result<GameTree> {
    let guess = |heads: f64, tails: f64| {
        GameNode::decision(Player::Min, "guess", vec![GameNode::Terminal(heads), GameNode::Terminal(tails)])
    };
    let root = GameNode::decision(Player::Max, "pick", vec![guess(1.0, 0.0), guess(0.0, 1.0)]);
    GameTree::from_root(root, GameOptions::default())
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameConfig {
    Kuhn,
    Leduc(LeducConfig),
    LiarsDice(LiarsDiceConfig),
    HardVariable { k: usize, h: usize, delta: f64, star: usize },
    HardFixed { a: usize, h: usize, delta: f64, star: usize },
    MatchingPennies,
    Random { budget: usize, branching: usize, seed: u64 },
    RandomLayered { depth: usize, branching: usize, actions: usize, seed: u64 },
}

impl GameConfig {
    pub fn name(&self) -> &'static str {
        match self {
            GameConfig::Kuhn => "kuhn",
            GameConfig::Leduc(_) => "leduc",
            GameConfig::LiarsDice(_) => "liars_dice",
            GameConfig::HardVariable { .. } => "hard_var",
            GameConfig::HardFixed { .. } => "hard_fixed",
            GameConfig::MatchingPennies => "matching_pennies",
            GameConfig::Random { .. } => "random",
            GameConfig::RandomLayered { .. } => "random_layered",
        }
    }

    pub fn build(&self) -> Result<GameTree> {
        match self {
            GameConfig::Kuhn => build_kuhn(),
            GameConfig::Leduc(c) => build_leduc(c),
            GameConfig::LiarsDice(c) => build_liars_dice(c),
            &GameConfig::HardVariable { k, h, delta, star } => build_hard_variable(k, h, delta, star),
            &GameConfig::HardFixed { a, h, delta, star } => build_hard_fixed(a, h, delta, star),
            GameConfig::MatchingPennies => build_matching_pennies(),
            &GameConfig::Random {
                budget,
                branching,
                seed,
            } => build_random(budget, branching, seed),
            &GameConfig::RandomLayered {
                depth,
                branching,
                actions,
                seed,
            } => build_random_layered(depth, branching, actions, seed),
        }
    }
}

struct Params<'a> {
    game: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn new(game: &'a str, body: Option<&'a str>, allowed: &[&str]) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in body.unwrap_or("").split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Argument(format!("{game}: expected key=value, got {item:?}")))?;
            let k = k.trim();
            if !allowed.contains(&k) {
                return Err(Error::Argument(format!(
                    "{game}: unknown parameter {k:?} (valid: {})",
                    allowed.join(", ")
                )));
            }
            pairs.push((k, v.trim()));
        }
        Ok(Self { game, pairs })
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.pairs.iter().rev().find(|(k, _)| *k == key) {
            None => Ok(default),
            Some((_, v)) => v
                .parse()
                .map_err(|_| Error::Argument(format!("{}: bad value {v:?} for {key}", self.game))),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        match self.pairs.iter().rev().find(|(k, _)| *k == key) {
            None => Err(Error::Argument(format!("{}: missing parameter {key}", self.game))),
            Some((_, v)) => v
                .parse()
                .map_err(|_| Error::Argument(format!("{}: bad value {v:?} for {key}", self.game))),
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "1" | "true" | "on" | "yes" => Some(true),
        "0" | "false" | "off" | "no" => Some(false),
        _ => None,
    }
}

impl FromStr for GameConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, body) = match s.split_once(':') {
            Some((n, b)) => (n, Some(b)),
            None => (s, None),
        };
        Ok(match name {
            "kuhn" => {
                Params::new(name, body, &[])?;
                GameConfig::Kuhn
            }
            "matching_pennies" => {
                Params::new(name, body, &[])?;
                GameConfig::MatchingPennies
            }
            "leduc" => {
                let p = Params::new(name, body, &["ranks", "suits", "raise1", "raise2", "cap"])?;
                let d = LeducConfig::default();
                GameConfig::Leduc(LeducConfig {
                    ranks: p.get("ranks", d.ranks)?,
                    suits: p.get("suits", d.suits)?,
                    raise: [p.get("raise1", d.raise[0])?, p.get("raise2", d.raise[1])?],
                    cap: p.get("cap", d.cap)?,
                })
            }
            "liars_dice" => {
                let p = Params::new(name, body, &["dice", "faces", "wild", "budget"])?;
                let d = LiarsDiceConfig::default();
                let wild: String = p.get("wild", "on".to_string())?;
                GameConfig::LiarsDice(LiarsDiceConfig {
                    dice: p.get("dice", d.dice)?,
                    faces: p.get("faces", d.faces)?,
                    wild_high: parse_bool(&wild)
                        .ok_or_else(|| Error::Argument(format!("liars_dice: bad value {wild:?} for wild")))?,
                    budget: p.get("budget", d.budget)?,
                })
            }
            "hard_var" => {
                let p = Params::new(name, body, &["K", "H", "delta", "star"])?;
                GameConfig::HardVariable {
                    k: p.require("K")?,
                    h: p.require("H")?,
                    delta: p.require("delta")?,
                    star: p.get("star", 1)?,
                }
            }
            "hard_fixed" => {
                let p = Params::new(name, body, &["A", "H", "delta", "star"])?;
                GameConfig::HardFixed {
                    a: p.require("A")?,
                    h: p.require("H")?,
                    delta: p.require("delta")?,
                    star: p.get("star", 1)?,
                }
            }
            "random" => {
                let p = Params::new(name, body, &["budget", "branching", "seed"])?;
                GameConfig::Random {
                    budget: p.get("budget", 200)?,
                    branching: p.get("branching", 3)?,
                    seed: p.get("seed", 0)?,
                }
            }
            "random_layered" => {
                let p = Params::new(name, body, &["depth", "branching", "actions", "seed"])?;
                GameConfig::RandomLayered {
                    depth: p.get("depth", 2)?,
                    branching: p.get("branching", 2)?,
                    actions: p.get("actions", 0)?,
                    seed: p.get("seed", 0)?,
                }
            }
            _ => {
                return Err(Error::Argument(format!(
                    "unknown game {name:?} (valid: {})",
                    GAME_NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for GameConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameConfig::Kuhn | GameConfig::MatchingPennies => write!(f, "{}", self.name()),
            GameConfig::Leduc(c) => write!(
                f,
                "leduc:ranks={},suits={},raise1={},raise2={},cap={}",
                c.ranks, c.suits, c.raise[0], c.raise[1], c.cap
            ),
            GameConfig::LiarsDice(c) => write!(
                f,
                "liars_dice:dice={},faces={},wild={},budget={}",
                c.dice,
                c.faces,
                if c.wild_high { "on" } else { "off" },
                c.budget
            ),
            GameConfig::HardVariable { k, h, delta, star } => {
                write!(f, "hard_var:K={k},H={h},delta={delta},star={star}")
            }
            GameConfig::HardFixed { a, h, delta, star } => {
                write!(f, "hard_fixed:A={a},H={h},delta={delta},star={star}")
            }
            GameConfig::Random {
                budget,
                branching,
                seed,
            } => write!(f, "random:budget={budget},branching={branching},seed={seed}"),
            GameConfig::RandomLayered {
                depth,
                branching,
                actions,
                seed,
            } => write!(f, "random_layered:depth={depth},branching={branching},actions={actions},seed={seed}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treeplex::BehavioralPolicy;

    #[test]
    fn kuhn_sizes() {
        let g = build_kuhn().unwrap();
        for p in Player::BOTH {
            let tp = g.treeplex(p);
            assert_eq!(tp.num_sequences(), 12);
            assert_eq!(tp.num_infosets(), 6);
        }
        assert_eq!(g.treeplex(Player::Max).max_depth(), 2);
        assert_eq!(g.treeplex(Player::Min).max_depth(), 1);
    }

    #[test]
    fn leduc_sizes() {
        let g = build_leduc(&LeducConfig::default()).unwrap();
        assert_eq!(g.treeplex(Player::Max).num_sequences(), 1092);
        assert_eq!(g.treeplex(Player::Min).num_sequences(), 1092);
        assert_eq!(g.scale().lo, -13.0);
        assert_eq!(g.scale().hi, 13.0);
    }

    #[test]
    fn hard_variable_values() {
        let g = build_hard_variable(2, 3, 0.1, 1).unwrap();
        assert_eq!(g.treeplex(Player::Max).num_sequences(), 6);
        let nu = BehavioralPolicy::uniform(g.treeplex(Player::Min));
        for (arm, mean) in [(0, 0.6), (1, 0.5)] {
            let mut mu = BehavioralPolicy::uniform(g.treeplex(Player::Max));
            mu.0[0] = if arm == 0 { 1.0 } else { 0.0 };
            mu.0[1] = 1.0 - mu.0[0];
            let v = g.expected_value(&mu, &nu).unwrap();
            assert!((v - mean).abs() < 1e-12, "arm {arm}: {v}");
        }
    }

    #[test]
    fn hard_fixed_counts() {
        let g = build_hard_fixed(2, 2, 0.1, 3).unwrap();
        assert_eq!(g.treeplex(Player::Max).num_infosets(), 3);
        assert_eq!(g.treeplex(Player::Max).num_sequences(), 6);
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in [
            "kuhn",
            "leduc:ranks=3,suits=2,raise1=2,raise2=4,cap=2",
            "hard_var:K=8,H=4,delta=0.05,star=3",
            "hard_fixed:A=2,H=3,delta=0.1,star=1",
            "random:budget=50,branching=3,seed=9",
            "random_layered:depth=2,branching=3,actions=0,seed=1",
            "liars_dice:dice=1,faces=6,wild=on,budget=5000000",
        ] {
            let cfg: GameConfig = s.parse().unwrap();
            assert_eq!(cfg.to_string(), s);
        }
        assert!(matches!("poker".parse::<GameConfig>(), Err(Error::Argument(_))));
        assert!(matches!("kuhn:x=1".parse::<GameConfig>(), Err(Error::Argument(_))));
    }

    #[test]
    fn layered_paths_have_full_depth() {
        let g = build_random_layered(3, 2, 0, 5).unwrap();
        for p in Player::BOTH {
            let tp = g.treeplex(p);
            assert_eq!(tp.max_depth(), 3);
            for s in 0..tp.num_sequences() {
                let leaf = tp.children(s).is_empty();
                assert_eq!(leaf, tp.infoset(tp.owner(s)).depth == 3);
            }
        }
        let g = build_random_layered(2, 3, 2, 5).unwrap();
        assert_eq!(g.treeplex(Player::Max).constant_action_count(), Some(2));
    }

    #[test]
    fn random_is_deterministic() {
        let a = build_random(120, 3, 4).unwrap().to_text();
        let b = build_random(120, 3, 4).unwrap().to_text();
        assert_eq!(a, b);
    }
}
