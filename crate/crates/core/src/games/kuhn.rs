use crate::error::Result;
use crate::game::{GameNode, GameOptions, GameTree, Player};

const CARDS: [char; 3] = ['J', 'Q', 'K'];

fn showdown(c1: usize, c2: usize, stake: f64) -> GameNode {
    GameNode::Terminal(if c1 > c2 { stake } else { -stake })
}

/// Three-card Kuhn poker with ante 1 and bet 1. Max is the first player.
pub fn build_kuhn() -> Result<GameTree> {
    let mut deals = Vec::with_capacity(6);
    for c1 in 0..3 {
        for c2 in 0..3 {
            if c1 == c2 {
                continue;
            }
            let p1 = |h: &str| format!("P1:{}:{h}", CARDS[c1]);
            let p2 = |h: &str| format!("P2:{}:{h}", CARDS[c2]);
            let after_check = GameNode::decision(
                Player::Min,
                p2("c"),
                vec![
                    showdown(c1, c2, 1.0),
                    GameNode::decision(
                        Player::Max,
                        p1("cb"),
                        vec![GameNode::Terminal(-1.0), showdown(c1, c2, 2.0)],
                    ),
                ],
            );
            let after_bet = GameNode::decision(
                Player::Min,
                p2("b"),
                vec![GameNode::Terminal(1.0), showdown(c1, c2, 2.0)],
            );
            deals.push((
                1.0 / 6.0,
                GameNode::decision(Player::Max, p1("-"), vec![after_check, after_bet]),
            ));
        }
    }
    GameTree::from_root(GameNode::Chance(deals), GameOptions::default())
}
