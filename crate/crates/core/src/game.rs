//! Explicit two-player zero-sum extensive-form games.
//!
//! Nodes are stored in depth-first preorder so every child has a larger id
//! than its parent. Utilities are for the max player; after scaling into
//! `[0, 1]` the min player's utility is `1 - scaled(u)`.
//!
//! Depth counts a player's own decisions only: chance and the opponent's
//! moves are folded into the reach probabilities of the player's information
//! sets.
//!
//! Rewards along a trajectory follow a fixed convention: the player gets 1 at
//! every own decision except the last `loss_span` ones, which each receive
//! the scaled terminal utility. With the default span of 1 the cumulative
//! loss of an episode is exactly `1 - scaled utility`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;

use crate::error::{parse_err, Error, Result};
use crate::treeplex::{
    behavioral_to_realization, best_sequence_response, BehavioralPolicy, InfoSetId,
    RealizationPlan, SeqId, SequenceVector, Treeplex, TreeplexBuilder,
};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    Max,
    Min,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::Max, Player::Min];

    pub fn index(self) -> usize {
        match self {
            Player::Max => 0,
            Player::Min => 1,
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::Max => Player::Min,
            Player::Min => Player::Max,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Player::Max => "max",
            Player::Min => "min",
        }
    }

    fn parse(s: &str) -> Option<Player> {
        match s {
            "max" => Some(Player::Max),
            "min" => Some(Player::Min),
            _ => None,
        }
    }
}

/// Game description handed to [`GameTree::from_root`].
#[derive(Debug, Clone, PartialEq)]
pub enum GameNode {
    Chance(Vec<(f64, GameNode)>),
    Decision {
        player: Player,
        infoset: String,
        children: Vec<GameNode>,
    },
    Terminal(f64),
}

impl GameNode {
    pub fn decision(player: Player, infoset: impl Into<String>, children: Vec<GameNode>) -> Self {
        GameNode::Decision {
            player,
            infoset: infoset.into(),
            children,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Chance {
        outcomes: Vec<(f64, NodeId)>,
    },
    Decision {
        player: Player,
        infoset: InfoSetId,
        children: Vec<NodeId>,
    },
    Terminal {
        utility: f64,
    },
}

/// Affine map from raw utilities onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityScale {
    pub lo: f64,
    pub hi: f64,
}

impl UtilityScale {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Argument(format!("invalid utility scale [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// Scale spanning the given range; a degenerate range is widened to
    /// `[u - 0.5, u + 0.5]`.
    pub fn spanning(lo: f64, hi: f64) -> Self {
        if lo < hi {
            Self { lo, hi }
        } else {
            Self {
                lo: lo - 0.5,
                hi: lo + 0.5,
            }
        }
    }

    pub fn apply(&self, u: f64) -> f64 {
        (u - self.lo) / (self.hi - self.lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameOptions {
    /// Overrides the scale computed from terminal utilities.
    pub scale: Option<UtilityScale>,
    /// Number of trailing own decisions that receive the terminal utility,
    /// indexed by [`Player::index`].
    pub loss_span: [usize; 2],
}

impl Default for GameOptions {
    fn default() -> Self {
        Self {
            scale: None,
            loss_span: [1, 1],
        }
    }
}

/// One own decision inside an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub infoset: InfoSetId,
    pub action: usize,
    pub seq: SeqId,
    pub reward: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_loss(&self) -> f64 {
        self.steps.iter().map(|s| 1.0 - s.reward).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub max: Trajectory,
    pub min: Trajectory,
    /// Scaled utility of the max player, in `[0, 1]`.
    pub utility: f64,
}

impl Episode {
    pub fn trajectory(&self, player: Player) -> &Trajectory {
        match player {
            Player::Max => &self.max,
            Player::Min => &self.min,
        }
    }
}

/// Chance and opponent folded into one player's treeplex.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedModel {
    pub player: Player,
    /// Per information set.
    pub reach: Vec<f64>,
    pub reward: SequenceVector,
    pub loss: SequenceVector,
    /// Loss mass of terminals reached without any own decision.
    pub offset: f64,
    pub loss_span: usize,
}

impl FoldedModel {
    /// Expected cumulative loss of `plan` against the folded opponent.
    pub fn expected_loss(&self, plan: &[f64]) -> Result<f64> {
        Ok(crate::treeplex::sequence_inner_product(plan, &self.loss)? + self.offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PayoffEntry {
    seq: [Option<SeqId>; 2],
    /// Σ chance · scaled utility.
    utility: f64,
    /// Σ chance · (1 - scaled utility).
    disutility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ReachEntry {
    infoset: InfoSetId,
    opp_seq: Option<SeqId>,
    chance: f64,
}

#[derive(Debug, Clone)]
pub struct GameTree {
    nodes: Vec<Node>,
    labels: [Vec<String>; 2],
    treeplexes: [Arc<Treeplex>; 2],
    scale: UtilityScale,
    loss_span: [usize; 2],
    payoff: Vec<PayoffEntry>,
    reach_entries: [Vec<ReachEntry>; 2],
}

type BuilderSeq = Option<(usize, usize)>;

#[derive(Default)]
struct Flattener {
    nodes: Vec<Node>,
    builders: [TreeplexBuilder; 2],
    intern: [HashMap<String, usize>; 2],
    labels: [Vec<String>; 2],
    parents: [Vec<BuilderSeq>; 2],
    actions: [Vec<usize>; 2],
    prev: [Vec<BuilderSeq>; 2],
    chance_reach: Vec<f64>,
}

impl Flattener {
    fn visit(&mut self, node: GameNode, prev: [BuilderSeq; 2], reach: f64) -> Result<NodeId> {
        let id = self.nodes.len();
        self.nodes.push(Node::Terminal { utility: 0.0 });
        self.prev[0].push(prev[0]);
        self.prev[1].push(prev[1]);
        self.chance_reach.push(reach);
        let built = match node {
            GameNode::Terminal(u) => {
                if !u.is_finite() {
                    return Err(Error::Structural(format!("terminal {id} has a non-finite utility")));
                }
                Node::Terminal { utility: u }
            }
            GameNode::Chance(outcomes) => {
                if outcomes.is_empty() {
                    return Err(Error::Structural(format!("chance node {id} has no outcomes")));
                }
                let total: f64 = outcomes.iter().map(|(p, _)| p).sum();
                if outcomes.iter().any(|(p, _)| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Structural(format!(
                        "chance node {id} is not a distribution (sum {total})"
                    )));
                }
                let mut out = Vec::with_capacity(outcomes.len());
                for (p, child) in outcomes {
                    let c = self.visit(child, prev, reach * p)?;
                    out.push((p, c));
                }
                Node::Chance { outcomes: out }
            }
            GameNode::Decision {
                player,
                infoset,
                children,
            } => {
                if children.is_empty() {
                    return Err(Error::Structural(format!("decision node {id} has no actions")));
                }
                if infoset.is_empty() || infoset.chars().any(char::is_whitespace) {
                    return Err(Error::Structural(format!(
                        "information set label {infoset:?} must be nonempty without whitespace"
                    )));
                }
                let p = player.index();
                let parent = prev[p];
                let b = match self.intern[p].get(&infoset) {
                    Some(&b) => {
                        if self.parents[p][b] != parent {
                            return Err(Error::Structural(format!(
                                "information set {infoset} violates perfect recall"
                            )));
                        }
                        if self.actions[p][b] != children.len() {
                            return Err(Error::Structural(format!(
                                "information set {infoset} has inconsistent action counts"
                            )));
                        }
                        b
                    }
                    None => {
                        let b = self.builders[p].add(parent, children.len());
                        self.intern[p].insert(infoset.clone(), b);
                        self.labels[p].push(infoset);
                        self.parents[p].push(parent);
                        self.actions[p].push(children.len());
                        b
                    }
                };
                let mut out = Vec::with_capacity(children.len());
                for (a, child) in children.into_iter().enumerate() {
                    let mut next = prev;
                    next[p] = Some((b, a));
                    out.push(self.visit(child, next, reach)?);
                }
                Node::Decision {
                    player,
                    infoset: b,
                    children: out,
                }
            }
        };
        self.nodes[id] = built;
        Ok(id)
    }
}

#[inline]
fn plan_at(plan: &[f64], seq: Option<SeqId>) -> f64 {
    seq.map_or(1.0, |s| plan[s])
}

fn sample_index<R: Rng + ?Sized>(weights: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last_positive = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last_positive
}

impl GameTree {
    pub fn from_root(root: GameNode, options: GameOptions) -> Result<Self> {
        let mut fl = Flattener::default();
        fl.visit(root, [None, None], 1.0)?;
        let mut finals: [Vec<InfoSetId>; 2] = [Vec::new(), Vec::new()];
        let mut tps = Vec::with_capacity(2);
        for p in 0..2 {
            if fl.builders[p].is_empty() {
                return Err(Error::Structural(format!(
                    "the {} player never acts",
                    Player::BOTH[p].name()
                )));
            }
            let (tp, map) = fl.builders[p].finish()?;
            finals[p] = map;
            tps.push(Arc::new(tp));
        }
        let treeplexes: [Arc<Treeplex>; 2] = [tps[0].clone(), tps[1].clone()];
        let to_seq = |p: usize, b: BuilderSeq| -> Option<SeqId> {
            b.map(|(x, a)| treeplexes[p].seq(finals[p][x], a))
        };

        let mut labels: [Vec<String>; 2] = [Vec::new(), Vec::new()];
        for p in 0..2 {
            let mut l = vec![String::new(); finals[p].len()];
            for (b, label) in fl.labels[p].drain(..).enumerate() {
                l[finals[p][b]] = label;
            }
            labels[p] = l;
        }

        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for node in fl.nodes.iter_mut() {
            match node {
                Node::Decision {
                    player, infoset, ..
                } => *infoset = finals[player.index()][*infoset],
                Node::Terminal { utility } => {
                    lo = lo.min(*utility);
                    hi = hi.max(*utility);
                }
                Node::Chance { .. } => {}
            }
        }
        let scale = options.scale.unwrap_or_else(|| UtilityScale::spanning(lo, hi));
        if lo < scale.lo - 1e-12 || hi > scale.hi + 1e-12 {
            return Err(Error::Argument(format!(
                "utilities [{lo}, {hi}] fall outside the scale [{}, {}]",
                scale.lo, scale.hi
            )));
        }
        if options.loss_span.contains(&0) {
            return Err(Error::Argument("loss span must be at least 1".into()));
        }

        let mut payoff_map: BTreeMap<(Option<SeqId>, Option<SeqId>), (f64, f64)> = BTreeMap::new();
        let mut reach_maps: [BTreeMap<(InfoSetId, Option<SeqId>), f64>; 2] =
            [BTreeMap::new(), BTreeMap::new()];
        for (id, node) in fl.nodes.iter().enumerate() {
            let seqs = [to_seq(0, fl.prev[0][id]), to_seq(1, fl.prev[1][id])];
            let c = fl.chance_reach[id];
            match node {
                Node::Terminal { utility } => {
                    let u = scale.apply(*utility);
                    let e = payoff_map.entry((seqs[0], seqs[1])).or_insert((0.0, 0.0));
                    e.0 += c * u;
                    e.1 += c * (1.0 - u);
                }
                Node::Decision {
                    player, infoset, ..
                } => {
                    let p = player.index();
                    *reach_maps[p].entry((*infoset, seqs[1 - p])).or_insert(0.0) += c;
                }
                Node::Chance { .. } => {}
            }
        }
        let payoff: Vec<PayoffEntry> = payoff_map
            .into_iter()
            .map(|((a, b), (u, d))| PayoffEntry {
                seq: [a, b],
                utility: u,
                disutility: d,
            })
            .collect();
        let reach_entries = reach_maps.map(|m| {
            m.into_iter()
                .map(|((infoset, opp_seq), chance)| ReachEntry {
                    infoset,
                    opp_seq,
                    chance,
                })
                .collect()
        });

        let tree = Self {
            nodes: fl.nodes,
            labels,
            treeplexes,
            scale,
            loss_span: options.loss_span,
            payoff,
            reach_entries,
        };
        tree.check_loss_span()?;
        Ok(tree)
    }

    /// A span `R > 1` needs every terminal to follow at least `R` own
    /// decisions, the last `R - 1` of them forced (single action), so that the
    /// terminal utility is already determined when it is first paid.
    fn check_loss_span(&self) -> Result<()> {
        for p in Player::BOTH {
            let r = self.loss_span[p.index()];
            if r == 1 {
                continue;
            }
            let tp = self.treeplex(p);
            for e in &self.payoff {
                let mut seq = e.seq[p.index()];
                for k in 0..r {
                    let s = seq.ok_or_else(|| {
                        Error::Structural(format!(
                            "loss span {r} exceeds the number of {} decisions on some path",
                            p.name()
                        ))
                    })?;
                    let x = tp.owner(s);
                    if k + 1 < r && tp.infoset(x).num_actions != 1 {
                        return Err(Error::Structural(format!(
                            "loss span {r} covers a {} decision with several actions",
                            p.name()
                        )));
                    }
                    seq = tp.infoset(x).parent;
                }
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn treeplex(&self, player: Player) -> &Treeplex {
        &self.treeplexes[player.index()]
    }

    pub fn treeplex_arc(&self, player: Player) -> Arc<Treeplex> {
        self.treeplexes[player.index()].clone()
    }

    pub fn labels(&self, player: Player) -> &[String] {
        &self.labels[player.index()]
    }

    pub fn infoset_by_label(&self, player: Player, label: &str) -> Option<InfoSetId> {
        self.labels[player.index()].iter().position(|l| l == label)
    }

    pub fn scale(&self) -> UtilityScale {
        self.scale
    }

    pub fn loss_span(&self, player: Player) -> usize {
        self.loss_span[player.index()]
    }

    fn check_policy(&self, player: Player, len: usize) -> Result<()> {
        let ax = self.treeplex(player).num_sequences();
        if len != ax {
            return Err(Error::Structural(format!(
                "{} strategy has {len} entries, expected {ax}",
                player.name()
            )));
        }
        Ok(())
    }

    /// Plays one episode. Policies must cover both treeplexes.
    pub fn sample_episode<R: Rng + ?Sized>(
        &self,
        mu: &BehavioralPolicy,
        nu: &BehavioralPolicy,
        rng: &mut R,
    ) -> Episode {
        debug_assert_eq!(mu.0.len(), self.treeplex(Player::Max).num_sequences());
        debug_assert_eq!(nu.0.len(), self.treeplex(Player::Min).num_sequences());
        let mut steps: [Vec<Step>; 2] = [Vec::new(), Vec::new()];
        let mut node = 0;
        let utility = loop {
            match &self.nodes[node] {
                Node::Chance { outcomes } => {
                    let i = sample_index(outcomes.iter().map(|o| o.0), rng);
                    node = outcomes[i].1;
                }
                Node::Decision {
                    player,
                    infoset,
                    children,
                } => {
                    let tp = self.treeplex(*player);
                    let policy = if *player == Player::Max { mu } else { nu };
                    let a = sample_index(policy.local(tp, *infoset).iter().copied(), rng);
                    steps[player.index()].push(Step {
                        infoset: *infoset,
                        action: a,
                        seq: tp.seq(*infoset, a),
                        reward: 1.0,
                    });
                    node = children[a];
                }
                Node::Terminal { utility } => break self.scale.apply(*utility),
            }
        };
        let [mut smax, mut smin] = steps;
        for (steps, r, last) in [
            (&mut smax, self.loss_span[0], utility),
            (&mut smin, self.loss_span[1], 1.0 - utility),
        ] {
            let n = steps.len();
            for s in steps.iter_mut().skip(n.saturating_sub(r)) {
                s.reward = last;
            }
        }
        Episode {
            max: Trajectory { steps: smax },
            min: Trajectory { steps: smin },
            utility,
        }
    }

    /// Folded model against an opponent realization plan. The map is linear
    /// in the plan, so sums of plans fold into sums of losses.
    pub fn folded_from_plan(&self, player: Player, opp_plan: &[f64]) -> Result<FoldedModel> {
        self.check_policy(player.opponent(), opp_plan.len())?;
        let p = player.index();
        let o = 1 - p;
        let tp = self.treeplex(player);
        let span = self.loss_span[p];
        let mut reach = vec![0.0; tp.num_infosets()];
        for e in &self.reach_entries[p] {
            reach[e.infoset] += e.chance * plan_at(opp_plan, e.opp_seq);
        }
        let mut loss = vec![0.0; tp.num_sequences()];
        let mut offset = 0.0;
        for e in &self.payoff {
            let mass = if player == Player::Max {
                e.disutility
            } else {
                e.utility
            };
            let w = mass * plan_at(opp_plan, e.seq[o]);
            if w == 0.0 {
                continue;
            }
            let mut seq = e.seq[p];
            if seq.is_none() {
                offset += w;
            }
            for _ in 0..span {
                let Some(s) = seq else { break };
                loss[s] += w;
                seq = tp.infoset(tp.owner(s)).parent;
            }
        }
        let mut reward = vec![1.0; tp.num_sequences()];
        for (x, &r) in reach.iter().enumerate() {
            if r > 0.0 {
                for s in tp.sequences(x) {
                    reward[s] = 1.0 - loss[s] / r;
                }
            }
        }
        Ok(FoldedModel {
            player,
            reach,
            reward: SequenceVector(reward),
            loss: SequenceVector(loss),
            offset,
            loss_span: span,
        })
    }

    pub fn folded_model(&self, player: Player, opponent: &BehavioralPolicy) -> Result<FoldedModel> {
        let plan = behavioral_to_realization(opponent, self.treeplex(player.opponent()))?;
        self.folded_from_plan(player, &plan)
    }

    /// Scaled value `V` from realization plans via the sequence-form payoff.
    pub fn value_of_plans(&self, mu: &[f64], nu: &[f64]) -> Result<f64> {
        self.check_policy(Player::Max, mu.len())?;
        self.check_policy(Player::Min, nu.len())?;
        Ok(self
            .payoff
            .iter()
            .map(|e| e.utility * plan_at(mu, e.seq[0]) * plan_at(nu, e.seq[1]))
            .sum())
    }

    /// Scaled value `V` by direct tree traversal.
    pub fn expected_value(&self, mu: &BehavioralPolicy, nu: &BehavioralPolicy) -> Result<f64> {
        self.check_policy(Player::Max, mu.0.len())?;
        self.check_policy(Player::Min, nu.0.len())?;
        let mut value = vec![0.0; self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            value[id] = match &self.nodes[id] {
                Node::Terminal { utility } => self.scale.apply(*utility),
                Node::Chance { outcomes } => outcomes.iter().map(|&(p, c)| p * value[c]).sum(),
                Node::Decision {
                    player,
                    infoset,
                    children,
                } => {
                    let tp = self.treeplex(*player);
                    let policy = if *player == Player::Max { mu } else { nu };
                    policy
                        .local(tp, *infoset)
                        .iter()
                        .zip(children)
                        .map(|(&q, &c)| q * value[c])
                        .sum()
                }
            };
        }
        Ok(value[0])
    }

    /// Best response of `player` to an opponent plan (possibly an unnormalized
    /// sum of plans). Returns the response plan and its total loss, offset
    /// included.
    pub fn best_response(&self, player: Player, opp_plan: &[f64]) -> Result<(RealizationPlan, f64)> {
        let folded = self.folded_from_plan(player, opp_plan)?;
        let (plan, value) = best_sequence_response(&folded.loss, self.treeplex(player))?;
        Ok((plan, value + folded.offset))
    }

    /// `max_μ V(μ, ν) - min_ν V(μ, ν)` for fixed realization plans.
    pub fn exploitability_of_plans(&self, mu: &[f64], nu: &[f64]) -> Result<f64> {
        let (_, lmax) = self.best_response(Player::Max, nu)?;
        let (_, lmin) = self.best_response(Player::Min, mu)?;
        let best_max = 1.0 - lmax / self.loss_span[0] as f64;
        let best_min = lmin / self.loss_span[1] as f64;
        Ok(best_max - best_min)
    }

    pub fn exploitability(&self, mu: &BehavioralPolicy, nu: &BehavioralPolicy) -> Result<f64> {
        let mp = behavioral_to_realization(mu, self.treeplex(Player::Max))?;
        let np = behavioral_to_realization(nu, self.treeplex(Player::Min))?;
        self.exploitability_of_plans(&mp, &np)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "game nodes={} scale={},{} span={},{}\n",
            self.nodes.len(),
            self.scale.lo,
            self.scale.hi,
            self.loss_span[0],
            self.loss_span[1]
        );
        for (id, node) in self.nodes.iter().enumerate() {
            let _ = match node {
                Node::Chance { outcomes } => {
                    let parts: Vec<String> = outcomes.iter().map(|(p, c)| format!("{p}:{c}")).collect();
                    writeln!(out, "node {id} chance {}", parts.join(" "))
                }
                Node::Decision {
                    player,
                    infoset,
                    children,
                } => {
                    let kids: Vec<String> = children.iter().map(|c| c.to_string()).collect();
                    writeln!(
                        out,
                        "node {id} decision player={} infoset={} children={}",
                        player.name(),
                        self.labels[player.index()][*infoset],
                        kids.join(",")
                    )
                }
                Node::Terminal { utility } => writeln!(out, "node {id} terminal {utility}"),
            };
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        enum Parsed {
            Chance(Vec<(f64, NodeId)>),
            Decision(Player, String, Vec<NodeId>),
            Terminal(f64),
        }
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
        let mut f = header.split_whitespace();
        if f.next() != Some("game") {
            return Err(parse_err(hl + 1, "expected `game` header"));
        }
        let field = |tok: Option<&str>, key: &str| -> Result<String> {
            tok.and_then(|t| t.strip_prefix(key))
                .and_then(|t| t.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| parse_err(hl + 1, format!("expected {key}=")))
        };
        let n: usize = field(f.next(), "nodes")?
            .parse()
            .map_err(|_| parse_err(hl + 1, "bad node count"))?;
        let pair = |s: String| -> Option<(String, String)> {
            let (a, b) = s.split_once(',')?;
            Some((a.to_string(), b.to_string()))
        };
        let (lo, hi) = pair(field(f.next(), "scale")?).ok_or_else(|| parse_err(hl + 1, "bad scale"))?;
        let (r0, r1) = pair(field(f.next(), "span")?).ok_or_else(|| parse_err(hl + 1, "bad span"))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| parse_err(hl + 1, "bad number"));
        let span = |s: &str| s.parse::<usize>().map_err(|_| parse_err(hl + 1, "bad span"));
        let options = GameOptions {
            scale: Some(UtilityScale::new(num(&lo)?, num(&hi)?)?),
            loss_span: [span(&r0)?, span(&r1)?],
        };

        let mut parsed: Vec<Parsed> = Vec::with_capacity(n);
        for (ln, line) in lines {
            let err = |m: &str| parse_err(ln + 1, m.to_string());
            let mut f = line.split_whitespace();
            if f.next() != Some("node") {
                return Err(err("expected `node` line"));
            }
            let id: usize = f.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad node id"))?;
            if id != parsed.len() {
                return Err(err("node ids must be consecutive"));
            }
            let child_id = |v: &str| -> Result<NodeId> {
                let c: NodeId = v.parse().map_err(|_| err("bad child id"))?;
                if c <= id || c >= n {
                    return Err(err("child ids must follow their parent"));
                }
                Ok(c)
            };
            let node = match f.next() {
                Some("chance") => {
                    let mut outs = Vec::new();
                    for tok in f {
                        let (p, c) = tok.split_once(':').ok_or_else(|| err("expected p:child"))?;
                        let p: f64 = p.parse().map_err(|_| err("bad probability"))?;
                        outs.push((p, child_id(c)?));
                    }
                    Parsed::Chance(outs)
                }
                Some("decision") => {
                    let player = f
                        .next()
                        .and_then(|t| t.strip_prefix("player="))
                        .and_then(Player::parse)
                        .ok_or_else(|| err("expected player=max|min"))?;
                    let label = f
                        .next()
                        .and_then(|t| t.strip_prefix("infoset="))
                        .ok_or_else(|| err("expected infoset="))?;
                    let kids = f
                        .next()
                        .and_then(|t| t.strip_prefix("children="))
                        .ok_or_else(|| err("expected children="))?;
                    let kids = kids.split(',').map(child_id).collect::<Result<Vec<_>>>()?;
                    Parsed::Decision(player, label.to_string(), kids)
                }
                Some("terminal") => {
                    let u: f64 = f.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad utility"))?;
                    Parsed::Terminal(u)
                }
                _ => return Err(err("unknown node kind")),
            };
            parsed.push(node);
        }
        if parsed.len() != n {
            return Err(parse_err(hl + 1, "node count does not match the body"));
        }

        fn build(parsed: &[Parsed], id: NodeId, expected: &mut NodeId) -> Result<GameNode> {
            if id != *expected {
                return Err(Error::Parse {
                    line: id + 2,
                    msg: "nodes are not in depth-first preorder".into(),
                });
            }
            *expected += 1;
            Ok(match &parsed[id] {
                Parsed::Terminal(u) => GameNode::Terminal(*u),
                Parsed::Chance(outs) => GameNode::Chance(
                    outs.iter()
                        .map(|&(p, c)| Ok((p, build(parsed, c, expected)?)))
                        .collect::<Result<_>>()?,
                ),
                Parsed::Decision(player, label, kids) => GameNode::Decision {
                    player: *player,
                    infoset: label.clone(),
                    children: kids
                        .iter()
                        .map(|&c| build(parsed, c, expected))
                        .collect::<Result<_>>()?,
                },
            })
        }
        let mut expected = 0;
        let root = build(&parsed, 0, &mut expected)?;
        if expected != n {
            return Err(parse_err(hl + 1, "some nodes are unreachable from the root"));
        }
        Self::from_root(root, options)
    }
}

pub fn sample_episode<R: Rng + ?Sized>(
    game: &GameTree,
    mu: &BehavioralPolicy,
    nu: &BehavioralPolicy,
    rng: &mut R,
) -> Episode {
    game.sample_episode(mu, nu, rng)
}

pub fn compute_folded_model(
    game: &GameTree,
    opponent: &BehavioralPolicy,
    player: Player,
) -> Result<FoldedModel> {
    game.folded_model(player, opponent)
}

pub fn expected_value(game: &GameTree, mu: &BehavioralPolicy, nu: &BehavioralPolicy) -> Result<f64> {
    game.expected_value(mu, nu)
}

pub fn exploitability(game: &GameTree, mu: &BehavioralPolicy, nu: &BehavioralPolicy) -> Result<f64> {
    game.exploitability(mu, nu)
}

/// Running sums needed for exact regret against the best fixed strategy in
/// hindsight.
#[derive(Debug, Clone)]
pub struct RegretTracker {
    sum_plans: [Vec<f64>; 2],
    sum_value: f64,
    episodes: usize,
}

impl RegretTracker {
    pub fn new(game: &GameTree) -> Self {
        Self {
            sum_plans: [
                vec![0.0; game.treeplex(Player::Max).num_sequences()],
                vec![0.0; game.treeplex(Player::Min).num_sequences()],
            ],
            sum_value: 0.0,
            episodes: 0,
        }
    }

    pub fn push(&mut self, game: &GameTree, mu: &[f64], nu: &[f64]) -> Result<()> {
        self.sum_value += game.value_of_plans(mu, nu)?;
        for (acc, plan) in self.sum_plans.iter_mut().zip([mu, nu]) {
            for (a, v) in acc.iter_mut().zip(plan) {
                *a += v;
            }
        }
        self.episodes += 1;
        Ok(())
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    pub fn sum_plan(&self, player: Player) -> &[f64] {
        &self.sum_plans[player.index()]
    }

    pub fn average_plan(&self, player: Player) -> RealizationPlan {
        let inv = 1.0 / self.episodes.max(1) as f64;
        RealizationPlan::from_values(self.sum_plans[player.index()].iter().map(|v| v * inv).collect())
    }

    /// `(R_max, R_min)` over the pushed profiles.
    pub fn regrets(&self, game: &GameTree) -> Result<(f64, f64)> {
        if self.episodes == 0 {
            return Ok((0.0, 0.0));
        }
        let (_, lmax) = game.best_response(Player::Max, &self.sum_plans[1])?;
        let (_, lmin) = game.best_response(Player::Min, &self.sum_plans[0])?;
        let t = self.episodes as f64;
        let r_max = t - lmax / game.loss_span(Player::Max) as f64 - self.sum_value;
        let r_min = self.sum_value - lmin / game.loss_span(Player::Min) as f64;
        Ok((r_max, r_min))
    }
}

pub fn oracle_regret(
    game: &GameTree,
    policies: &[(BehavioralPolicy, BehavioralPolicy)],
) -> Result<(f64, f64)> {
    if policies.is_empty() {
        return Err(Error::Argument("oracle regret needs at least one profile".into()));
    }
    let mut tracker = RegretTracker::new(game);
    for (mu, nu) in policies {
        let mp = behavioral_to_realization(mu, game.treeplex(Player::Max))?;
        let np = behavioral_to_realization(nu, game.treeplex(Player::Min))?;
        tracker.push(game, &mp, &np)?;
    }
    tracker.regrets(game)
}
