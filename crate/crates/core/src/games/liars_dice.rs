use crate::error::{Error, Result};
use crate::game::{GameNode, GameOptions, GameTree, Player};

/// Per-player AX of the variant used in published experiments.
pub const LIARS_DICE_TARGET_AX: usize = 24570;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiarsDiceConfig {
    pub dice: usize,
    pub faces: usize,
    /// The highest face counts as every face.
    pub wild_high: bool,
    /// Upper bound on generated nodes.
    pub budget: usize,
}

impl Default for LiarsDiceConfig {
    fn default() -> Self {
        Self {
            dice: 1,
            faces: 6,
            wild_high: true,
            budget: 5_000_000,
        }
    }
}

struct Builder<'a> {
    cfg: &'a LiarsDiceConfig,
    num_bids: usize,
    nodes: usize,
}

impl Builder<'_> {
    /// Bid index `i` claims at least `i / faces + 1` dice showing face
    /// `i % faces + 1`.
    fn bid(&self, i: usize) -> (usize, usize) {
        (i / self.cfg.faces + 1, i % self.cfg.faces + 1)
    }

    fn count(&self, rolls: &[Vec<usize>; 2], face: usize) -> usize {
        rolls
            .iter()
            .flatten()
            .filter(|&&d| d == face || (self.cfg.wild_high && d == self.cfg.faces))
            .count()
    }

    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.cfg.budget {
            return Err(Error::Resource(format!(
                "liar's dice tree exceeds the budget of {} nodes",
                self.cfg.budget
            )));
        }
        Ok(())
    }

    fn turn(&mut self, rolls: &[Vec<usize>; 2], history: &mut Vec<usize>, to_act: usize) -> Result<GameNode> {
        self.tick()?;
        let roll: Vec<String> = rolls[to_act].iter().map(|d| d.to_string()).collect();
        let bids: Vec<String> = history.iter().map(|b| b.to_string()).collect();
        let label = format!("P{}:{}:{}", to_act + 1, roll.join(""), if bids.is_empty() { "-".into() } else { bids.join(",") });
        let start = history.last().map_or(0, |&b| b + 1);
        let mut children = Vec::with_capacity(self.num_bids - start + 1);
        for b in start..self.num_bids {
            history.push(b);
            children.push(self.turn(rolls, history, 1 - to_act)?);
            history.pop();
        }
        if let Some(&last) = history.last() {
            self.tick()?;
            let (quantity, face) = self.bid(last);
            // the last bidder is the opponent of the caller
            let bidder_wins = self.count(rolls, face) >= quantity;
            let caller_wins = !bidder_wins;
            let max_wins = (to_act == 0) == caller_wins;
            children.push(GameNode::Terminal(if max_wins { 1.0 } else { -1.0 }));
        }
        let player = if to_act == 0 { Player::Max } else { Player::Min };
        Ok(GameNode::decision(player, label, children))
    }
}

fn rolls_of(dice: usize, faces: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dice {
        out = out
            .into_iter()
            .flat_map(|r| {
                (1..=faces).map(move |f| {
                    let mut r = r.clone();
                    r.push(f);
                    r
                })
            })
            .collect();
    }
    out
}

/// Liar's dice. Each player rolls privately, then players alternate raising
/// the bid (quantity, face) or calling the previous bid a lie. Max bids
/// first. Every roll sequence is an equally likely chance outcome.
pub fn build_liars_dice(cfg: &LiarsDiceConfig) -> Result<GameTree> {
    if cfg.dice == 0 || cfg.faces < 2 {
        return Err(Error::Argument("liar's dice needs at least one die with two faces".into()));
    }
    let mut b = Builder {
        cfg,
        num_bids: 2 * cfg.dice * cfg.faces,
        nodes: 0,
    };
    let rolls = rolls_of(cfg.dice, cfg.faces);
    let p = 1.0 / (rolls.len() * rolls.len()) as f64;
    let mut outcomes = Vec::with_capacity(rolls.len() * rolls.len());
    for r1 in &rolls {
        for r2 in &rolls {
            let pair = [r1.clone(), r2.clone()];
            outcomes.push((p, b.turn(&pair, &mut Vec::new(), 0)?));
        }
    }
    GameTree::from_root(GameNode::Chance(outcomes), GameOptions::default())
}
