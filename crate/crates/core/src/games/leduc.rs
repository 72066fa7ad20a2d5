use crate::error::{Error, Result};
use crate::game::{GameNode, GameOptions, GameTree, Player};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeducConfig {
    pub ranks: usize,
    pub suits: usize,
    /// Raise size in the first and second betting round.
    pub raise: [u32; 2],
    /// Maximum number of raises per round.
    pub cap: usize,
}

impl Default for LeducConfig {
    fn default() -> Self {
        Self {
            ranks: 3,
            suits: 2,
            raise: [2, 4],
            cap: 2,
        }
    }
}

impl LeducConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ranks < 2 || self.suits < 1 || self.ranks * self.suits < 3 {
            return Err(Error::Argument("leduc needs at least 3 cards and 2 ranks".into()));
        }
        if self.raise.contains(&0) {
            return Err(Error::Argument("leduc raise sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Act {
    Fold,
    Call,
    Raise,
}

impl Act {
    fn code(self) -> char {
        match self {
            Act::Fold => 'f',
            Act::Call => 'c',
            Act::Raise => 'r',
        }
    }
}

struct Deal {
    private: [usize; 2],
    public: Option<usize>,
}

struct Builder<'a> {
    cfg: &'a LeducConfig,
}

impl Builder<'_> {
    fn rank(&self, card: usize) -> usize {
        card / self.cfg.suits
    }

    fn label(&self, player: usize, deal: &Deal, history: &str) -> String {
        let public = deal.public.map_or_else(|| "-".to_string(), |c| c.to_string());
        format!("P{}:{}:{}:{}", player + 1, deal.private[player], public, history)
    }

    fn showdown(&self, deal: &Deal, pot: [u32; 2]) -> GameNode {
        let public = self.rank(deal.public.expect("showdown after the public card"));
        let r = [self.rank(deal.private[0]), self.rank(deal.private[1])];
        let pair = [r[0] == public, r[1] == public];
        let winner = if pair[0] != pair[1] {
            Some(if pair[0] { 0 } else { 1 })
        } else if r[0] != r[1] {
            Some(if r[0] > r[1] { 0 } else { 1 })
        } else {
            None
        };
        GameNode::Terminal(match winner {
            Some(0) => pot[1] as f64,
            Some(_) => -(pot[0] as f64),
            None => 0.0,
        })
    }

    /// Betting within one round. `to_act` is the player to move, `facing`
    /// whether there is an outstanding raise, `checked` whether the round
    /// already saw a check.
    #[allow(clippy::too_many_arguments)]
    fn betting(
        &self,
        deal: &Deal,
        round: usize,
        history: &mut String,
        pot: [u32; 2],
        to_act: usize,
        raises: usize,
        checked: bool,
        remaining_deck: &[usize],
    ) -> GameNode {
        let facing = pot[0] != pot[1];
        let mut acts = Vec::with_capacity(3);
        if facing {
            acts.push(Act::Fold);
        }
        acts.push(Act::Call);
        if raises < self.cfg.cap {
            acts.push(Act::Raise);
        }
        let label = self.label(to_act, deal, history);
        let mut children = Vec::with_capacity(acts.len());
        for act in acts {
            history.push(act.code());
            let child = match act {
                Act::Fold => GameNode::Terminal(if to_act == 0 {
                    -(pot[0] as f64)
                } else {
                    pot[1] as f64
                }),
                Act::Call => {
                    let mut next = pot;
                    next[to_act] = pot[1 - to_act];
                    if facing || checked {
                        self.end_round(deal, round, history, next, remaining_deck)
                    } else {
                        self.betting(deal, round, history, next, 1 - to_act, raises, true, remaining_deck)
                    }
                }
                Act::Raise => {
                    let mut next = pot;
                    next[to_act] = pot[1 - to_act] + self.cfg.raise[round];
                    self.betting(deal, round, history, next, 1 - to_act, raises + 1, checked, remaining_deck)
                }
            };
            history.pop();
            children.push(child);
        }
        GameNode::decision(if to_act == 0 { Player::Max } else { Player::Min }, label, children)
    }

    fn end_round(
        &self,
        deal: &Deal,
        round: usize,
        history: &mut String,
        pot: [u32; 2],
        remaining_deck: &[usize],
    ) -> GameNode {
        if round == 1 {
            return self.showdown(deal, pot);
        }
        let p = 1.0 / remaining_deck.len() as f64;
        let outcomes = remaining_deck
            .iter()
            .map(|&c| {
                let next = Deal {
                    private: deal.private,
                    public: Some(c),
                };
                history.push('/');
                let node = self.betting(&next, 1, history, pot, 0, 0, false, &[]);
                history.pop();
                (p, node)
            })
            .collect();
        GameNode::Chance(outcomes)
    }
}

/// Leduc hold'em: private card each, one public card after the first round,
/// two betting rounds with a per-round raise cap. Information sets see card
/// identities (rank and suit). Max is the first player in both rounds.
pub fn build_leduc(cfg: &LeducConfig) -> Result<GameTree> {
    cfg.validate()?;
    let b = Builder { cfg };
    let n = cfg.ranks * cfg.suits;
    let p = 1.0 / (n * (n - 1)) as f64;
    let mut deals = Vec::with_capacity(n * (n - 1));
    for c1 in 0..n {
        for c2 in 0..n {
            if c1 == c2 {
                continue;
            }
            let deck: Vec<usize> = (0..n).filter(|&c| c != c1 && c != c2).collect();
            let deal = Deal {
                private: [c1, c2],
                public: None,
            };
            let mut history = String::new();
            deals.push((p, b.betting(&deal, 0, &mut history, [1, 1], 0, 0, false, &deck)));
        }
    }
    GameTree::from_root(GameNode::Chance(deals), GameOptions::default())
}
