//! One player's information-set tree in sequence form.
//!
//! Information sets are laid out in a flat array sorted by `(depth, parent
//! sequence)`, and the actions of each information set occupy a contiguous
//! range of sequence indices. Iterating information sets in index order is a
//! top-down traversal; iterating in reverse is bottom-up.

use std::fmt::Write as _;
use std::ops::{Deref, DerefMut, Range};

use crate::error::{parse_err, Error, Result};

pub type InfoSetId = usize;
pub type SeqId = usize;

/// Smallest reach probability stored by the balanced kernel.
pub const REACH_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoSetRecord {
    /// Own-decision depth, starting at 1.
    pub depth: usize,
    /// Sequence leading to this information set, `None` for roots.
    pub parent: Option<SeqId>,
    pub first_seq: SeqId,
    pub num_actions: usize,
}

impl InfoSetRecord {
    pub fn sequences(&self) -> Range<SeqId> {
        self.first_seq..self.first_seq + self.num_actions
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Treeplex {
    infosets: Vec<InfoSetRecord>,
    seq_owner: Vec<InfoSetId>,
    children: Vec<Vec<InfoSetId>>,
    roots: Vec<InfoSetId>,
    max_depth: usize,
}

impl Treeplex {
    /// Builds a treeplex from `(parent sequence, action count)` records that
    /// are already in canonical layout order.
    pub fn from_layout(records: &[(Option<SeqId>, usize)]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Structural("treeplex needs at least one information set".into()));
        }
        let mut infosets: Vec<InfoSetRecord> = Vec::with_capacity(records.len());
        let mut seq_owner: Vec<InfoSetId> = Vec::new();
        let mut prev_key = (0usize, 0usize);
        for (x, &(parent, num_actions)) in records.iter().enumerate() {
            if num_actions == 0 {
                return Err(Error::Structural(format!("information set {x} has no actions")));
            }
            let depth = match parent {
                None => 1,
                Some(s) => {
                    if s >= seq_owner.len() {
                        return Err(Error::Structural(format!(
                            "information set {x} refers to sequence {s} that is not laid out before it"
                        )));
                    }
                    infosets[seq_owner[s]].depth + 1
                }
            };
            let key = (depth, parent.map_or(0, |s| s + 1));
            if x > 0 && key < prev_key {
                return Err(Error::Structural(format!(
                    "information set {x} breaks the (depth, parent) layout order"
                )));
            }
            prev_key = key;
            let first_seq = seq_owner.len();
            seq_owner.extend(std::iter::repeat_n(x, num_actions));
            infosets.push(InfoSetRecord {
                depth,
                parent,
                first_seq,
                num_actions,
            });
        }
        let mut children = vec![Vec::new(); seq_owner.len()];
        let mut roots = Vec::new();
        for (x, rec) in infosets.iter().enumerate() {
            match rec.parent {
                Some(s) => children[s].push(x),
                None => roots.push(x),
            }
        }
        let max_depth = infosets.iter().map(|r| r.depth).max().unwrap_or(1);
        Ok(Self {
            infosets,
            seq_owner,
            children,
            roots,
            max_depth,
        })
    }

    pub fn num_infosets(&self) -> usize {
        self.infosets.len()
    }

    /// Total number of sequences, `AX`.
    pub fn num_sequences(&self) -> usize {
        self.seq_owner.len()
    }

    /// Maximum own-decision depth, `H`.
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn infoset(&self, x: InfoSetId) -> &InfoSetRecord {
        &self.infosets[x]
    }

    pub fn infosets(&self) -> &[InfoSetRecord] {
        &self.infosets
    }

    pub fn sequences(&self, x: InfoSetId) -> Range<SeqId> {
        self.infosets[x].sequences()
    }

    pub fn seq(&self, x: InfoSetId, action: usize) -> SeqId {
        debug_assert!(action < self.infosets[x].num_actions);
        self.infosets[x].first_seq + action
    }

    pub fn owner(&self, s: SeqId) -> InfoSetId {
        self.seq_owner[s]
    }

    pub fn action_index(&self, s: SeqId) -> usize {
        s - self.infosets[self.seq_owner[s]].first_seq
    }

    /// Information sets that directly follow sequence `s`.
    pub fn children(&self, s: SeqId) -> &[InfoSetId] {
        &self.children[s]
    }

    pub fn roots(&self) -> &[InfoSetId] {
        &self.roots
    }

    /// Parent information set of `x`, if any.
    pub fn parent_infoset(&self, x: InfoSetId) -> Option<InfoSetId> {
        self.infosets[x].parent.map(|s| self.seq_owner[s])
    }

    /// `Some(A)` when every information set has exactly `A` actions.
    pub fn constant_action_count(&self) -> Option<usize> {
        let a = self.infosets[0].num_actions;
        self.infosets.iter().all(|r| r.num_actions == a).then_some(a)
    }

    pub fn max_actions(&self) -> usize {
        self.infosets.iter().map(|r| r.num_actions).max().unwrap_or(0)
    }

    /// Whether `ancestor` lies on the history of `x` (inclusive).
    pub fn is_ancestor_or_self(&self, ancestor: InfoSetId, mut x: InfoSetId) -> bool {
        loop {
            if x == ancestor {
                return true;
            }
            match self.parent_infoset(x) {
                Some(p) => x = p,
                None => return false,
            }
        }
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.num_sequences() {
            return Err(Error::Structural(format!(
                "{what} has {len} entries but the treeplex has {} sequences",
                self.num_sequences()
            )));
        }
        Ok(())
    }

    /// Line-oriented text form; `from_text` inverts it exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "treeplex H={} X={} AX={}\n",
            self.max_depth,
            self.num_infosets(),
            self.num_sequences()
        );
        for (x, rec) in self.infosets.iter().enumerate() {
            let parent = rec.parent.map_or_else(|| "ROOT".to_string(), |s| s.to_string());
            let _ = writeln!(
                out,
                "infoset {x} depth={} parent={parent} actions={}",
                rec.depth, rec.num_actions
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("treeplex") {
            return Err(parse_err(hline + 1, "expected `treeplex` header"));
        }
        let h: usize = keyed(fields.next(), "H", hline)?;
        let x_count: usize = keyed(fields.next(), "X", hline)?;
        let ax: usize = keyed(fields.next(), "AX", hline)?;
        let mut records = Vec::with_capacity(x_count);
        let mut depths = Vec::with_capacity(x_count);
        for (ln, line) in lines {
            let mut f = line.split_whitespace();
            if f.next() != Some("infoset") {
                return Err(parse_err(ln + 1, "expected `infoset` line"));
            }
            let id: usize = f
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| parse_err(ln + 1, "bad information set id"))?;
            if id != records.len() {
                return Err(parse_err(ln + 1, format!("expected id {}", records.len())));
            }
            let depth: usize = keyed(f.next(), "depth", ln)?;
            let parent_tok = f
                .next()
                .and_then(|v| v.strip_prefix("parent="))
                .ok_or_else(|| parse_err(ln + 1, "missing parent="))?;
            let parent = if parent_tok == "ROOT" {
                None
            } else {
                Some(
                    parent_tok
                        .parse::<usize>()
                        .map_err(|_| parse_err(ln + 1, "bad parent sequence"))?,
                )
            };
            let actions: usize = keyed(f.next(), "actions", ln)?;
            records.push((parent, actions));
            depths.push((ln, depth));
        }
        let tp = Self::from_layout(&records)?;
        for (x, (ln, depth)) in depths.into_iter().enumerate() {
            if tp.infosets[x].depth != depth {
                return Err(parse_err(ln + 1, "depth does not match parent chain"));
            }
        }
        if tp.max_depth != h || tp.num_infosets() != x_count || tp.num_sequences() != ax {
            return Err(parse_err(hline + 1, "header counts do not match the body"));
        }
        Ok(tp)
    }
}

fn keyed<T: std::str::FromStr>(tok: Option<&str>, key: &str, line: usize) -> Result<T> {
    tok.and_then(|t| t.strip_prefix(key))
        .and_then(|t| t.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(line + 1, format!("expected {key}=<value>")))
}

/// Collects information sets in any order and produces the canonical layout.
#[derive(Debug, Default, Clone)]
pub struct TreeplexBuilder {
    // (parent as (builder infoset, action), action count)
    nodes: Vec<(Option<(usize, usize)>, usize)>,
}

impl TreeplexBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an information set following action `parent.1` of builder
    /// information set `parent.0`; returns its builder id.
    pub fn add(&mut self, parent: Option<(usize, usize)>, num_actions: usize) -> usize {
        self.nodes.push((parent, num_actions));
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Returns the treeplex and the map from builder ids to final ids.
    pub fn finish(&self) -> Result<(Treeplex, Vec<InfoSetId>)> {
        let n = self.nodes.len();
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut level: Vec<usize> = Vec::new();
        for (b, &(parent, k)) in self.nodes.iter().enumerate() {
            match parent {
                None => level.push(b),
                Some((p, a)) => {
                    if p >= n || a >= self.nodes[p].1 {
                        return Err(Error::Structural(format!(
                            "builder information set {b} has an invalid parent"
                        )));
                    }
                    kids[p].push(b);
                }
            }
            if k == 0 {
                return Err(Error::Structural(format!("builder information set {b} has no actions")));
            }
        }
        let mut final_id = vec![usize::MAX; n];
        let mut first_seq = Vec::with_capacity(n);
        let mut records = Vec::with_capacity(n);
        let mut next_seq = 0usize;
        while !level.is_empty() {
            let mut keyed: Vec<(usize, usize)> = level
                .iter()
                .map(|&b| {
                    let key = match self.nodes[b].0 {
                        None => 0,
                        Some((p, a)) => first_seq[final_id[p]] + a + 1,
                    };
                    (key, b)
                })
                .collect();
            // stable sort keeps insertion order among siblings
            keyed.sort_by_key(|&(k, _)| k);
            let mut next = Vec::new();
            for (_, b) in keyed {
                let (parent, k) = self.nodes[b];
                final_id[b] = records.len();
                first_seq.push(next_seq);
                records.push((parent.map(|(p, a)| first_seq[final_id[p]] + a), k));
                next_seq += k;
                next.extend(kids[b].iter().copied());
            }
            next.sort_unstable();
            level = next;
        }
        if records.len() != n {
            return Err(Error::Structural("builder information sets contain a cycle".into()));
        }
        Ok((Treeplex::from_layout(&records)?, final_id))
    }
}

/// Real vector with one entry per sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceVector(pub Vec<f64>);

impl SequenceVector {
    pub fn zeros(tp: &Treeplex) -> Self {
        Self(vec![0.0; tp.num_sequences()])
    }
}

impl Deref for SequenceVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for SequenceVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for SequenceVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Sequence-form strategy: `plan[(x,a)]` is the product of behavioral
/// probabilities along the history of `(x,a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationPlan(pub SequenceVector);

impl RealizationPlan {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self(SequenceVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Largest violation of the flow constraints (and of nonnegativity).
    pub fn flow_residual(&self, tp: &Treeplex) -> Result<f64> {
        tp.check_len(self.0.len(), "realization plan")?;
        let mut worst = 0.0f64;
        for (x, rec) in tp.infosets().iter().enumerate() {
            let mass: f64 = self.0[tp.sequences(x)].iter().sum();
            let expected = rec.parent.map_or(1.0, |s| self.0[s]);
            worst = worst.max((mass - expected).abs());
        }
        for &v in self.0.iter() {
            if v < 0.0 {
                worst = worst.max(-v);
            }
        }
        Ok(worst)
    }

    /// Probability mass reaching information set `x` (its parent sequence).
    pub fn infoset_mass(&self, tp: &Treeplex, x: InfoSetId) -> f64 {
        tp.infoset(x).parent.map_or(1.0, |s| self.0[s])
    }
}

impl Deref for RealizationPlan {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Local action distributions, stored per sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct BehavioralPolicy(pub Vec<f64>);

impl BehavioralPolicy {
    pub fn uniform(tp: &Treeplex) -> Self {
        let mut probs = vec![0.0; tp.num_sequences()];
        for rec in tp.infosets() {
            let p = 1.0 / rec.num_actions as f64;
            probs[rec.sequences()].fill(p);
        }
        Self(probs)
    }

    pub fn local(&self, tp: &Treeplex, x: InfoSetId) -> &[f64] {
        &self.0[tp.sequences(x)]
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    /// Checks that every local vector lies on the simplex within `tol`.
    pub fn validate(&self, tp: &Treeplex, tol: f64) -> Result<()> {
        tp.check_len(self.0.len(), "behavioral policy")?;
        for x in 0..tp.num_infosets() {
            let local = self.local(tp, x);
            if local.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::Numeric(format!("information set {x} has an invalid probability")));
            }
            let sum: f64 = local.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::Numeric(format!(
                    "information set {x} sums to {sum} instead of 1"
                )));
            }
        }
        Ok(())
    }
}

pub fn behavioral_to_realization(policy: &BehavioralPolicy, tp: &Treeplex) -> Result<RealizationPlan> {
    tp.check_len(policy.0.len(), "behavioral policy")?;
    let mut plan = vec![0.0; tp.num_sequences()];
    for rec in tp.infosets() {
        let mass = rec.parent.map_or(1.0, |s| plan[s]);
        for s in rec.sequences() {
            plan[s] = mass * policy.0[s];
        }
    }
    Ok(RealizationPlan::from_values(plan))
}

/// Normalizes each information set's slice of `plan`; information sets with
/// zero mass take the `fallback` distribution.
pub fn realization_to_behavioral(
    plan: &RealizationPlan,
    tp: &Treeplex,
    fallback: &BehavioralPolicy,
) -> Result<BehavioralPolicy> {
    tp.check_len(plan.0.len(), "realization plan")?;
    tp.check_len(fallback.0.len(), "fallback policy")?;
    let mut probs = vec![0.0; tp.num_sequences()];
    for x in 0..tp.num_infosets() {
        let range = tp.sequences(x);
        let denom: f64 = plan.0[range.clone()].iter().sum();
        if denom > 0.0 {
            for s in range {
                probs[s] = plan.0[s] / denom;
            }
        } else {
            for s in range {
                probs[s] = fallback.0[s];
            }
        }
    }
    Ok(BehavioralPolicy(probs))
}

pub fn average_realization(plans: &[RealizationPlan]) -> Result<RealizationPlan> {
    let first = plans
        .first()
        .ok_or_else(|| Error::Argument("cannot average an empty list of plans".into()))?;
    let n = first.0.len();
    let mut acc = vec![0.0; n];
    for p in plans {
        if p.0.len() != n {
            return Err(Error::Structural("plans have different layouts".into()));
        }
        for (a, v) in acc.iter_mut().zip(p.0.iter()) {
            *a += v;
        }
    }
    let inv = 1.0 / plans.len() as f64;
    acc.iter_mut().for_each(|v| *v *= inv);
    Ok(RealizationPlan::from_values(acc))
}

pub fn sequence_inner_product(plan: &[f64], loss: &[f64]) -> Result<f64> {
    if plan.len() != loss.len() {
        return Err(Error::Structural(format!(
            "layout mismatch: {} vs {} entries",
            plan.len(),
            loss.len()
        )));
    }
    Ok(plan.iter().zip(loss).map(|(p, l)| p * l).sum())
}

/// Exact minimizer of `<plan, loss>` over the realization polytope, by
/// bottom-up dynamic programming. Ties go to the lowest action index.
pub fn best_sequence_response(loss: &[f64], tp: &Treeplex) -> Result<(RealizationPlan, f64)> {
    tp.check_len(loss.len(), "loss vector")?;
    let nx = tp.num_infosets();
    let mut value = vec![0.0; nx];
    let mut choice = vec![0usize; nx];
    for x in (0..nx).rev() {
        let mut best = f64::INFINITY;
        let mut best_a = 0;
        for (a, s) in tp.sequences(x).enumerate() {
            let q = loss[s] + tp.children(s).iter().map(|&y| value[y]).sum::<f64>();
            if q < best {
                best = q;
                best_a = a;
            }
        }
        value[x] = best;
        choice[x] = best_a;
    }
    let mut plan = vec![0.0; tp.num_sequences()];
    for (x, rec) in tp.infosets().iter().enumerate() {
        let mass = rec.parent.map_or(1.0, |s| plan[s]);
        if mass > 0.0 {
            plan[rec.first_seq + choice[x]] = mass;
        }
    }
    let total = tp.roots().iter().map(|&r| value[r]).sum();
    Ok((RealizationPlan::from_values(plan), total))
}

/// Balanced transition kernel over one treeplex.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedKernel {
    /// `A↓(x)`: number of actions in the subtree rooted at `x`, inclusive.
    pub subtree_actions: Vec<usize>,
    /// Reach probability of each information set under the kernel.
    pub reach: Vec<f64>,
    /// Branch probability of `x` given its parent sequence (for roots, the
    /// initial probability).
    pub step: Vec<f64>,
}

pub fn compute_balanced_kernel(tp: &Treeplex) -> BalancedKernel {
    let nx = tp.num_infosets();
    let mut sub = vec![0usize; nx];
    for x in (0..nx).rev() {
        let mut total = tp.infoset(x).num_actions;
        for s in tp.sequences(x) {
            total += tp.children(s).iter().map(|&y| sub[y]).sum::<usize>();
        }
        sub[x] = total;
    }
    let ax = tp.num_sequences() as f64;
    let mut step = vec![0.0; nx];
    let mut reach = vec![0.0; nx];
    for (x, rec) in tp.infosets().iter().enumerate() {
        match rec.parent {
            None => {
                step[x] = sub[x] as f64 / ax;
                reach[x] = step[x].max(REACH_FLOOR);
            }
            Some(s) => {
                let denom: usize = tp.children(s).iter().map(|&y| sub[y]).sum();
                step[x] = sub[x] as f64 / denom as f64;
                let parent = tp.owner(s);
                reach[x] = (reach[parent] * step[x]).max(REACH_FLOOR);
            }
        }
    }
    BalancedKernel {
        subtree_actions: sub,
        reach,
        step,
    }
}

/// Reach probabilities of an arbitrary transition kernel given by per
/// information set branch probabilities (`step[x]` conditional on the parent
/// sequence, or the initial probability for roots).
pub fn kernel_reach(tp: &Treeplex, step: &[f64]) -> Vec<f64> {
    let mut reach = vec![0.0; tp.num_infosets()];
    for (x, rec) in tp.infosets().iter().enumerate() {
        reach[x] = match rec.parent {
            None => step[x],
            Some(s) => reach[tp.owner(s)] * step[x],
        };
    }
    reach
}

/// Branch probabilities of the transition kernel induced by unnormalized
/// per-information-set reach (for example chance times opponent reach):
/// each sibling group (children of one sequence, or the roots) is
/// normalized, and a group without mass becomes uniform.
pub fn kernel_from_reach(tp: &Treeplex, reach: &[f64]) -> Vec<f64> {
    let mut step = vec![0.0; tp.num_infosets()];
    let mut normalize = |group: &[InfoSetId]| {
        let total: f64 = group.iter().map(|&y| reach[y]).sum();
        for &y in group {
            step[y] = if total > 0.0 {
                reach[y] / total
            } else {
                1.0 / group.len() as f64
            };
        }
    };
    normalize(tp.roots());
    for s in 0..tp.num_sequences() {
        normalize(tp.children(s));
    }
    step
}


#[cfg(test)]
mod tests {
    use super::fixtures::t1;
    use super::*;

    fn single(actions: usize) -> Treeplex {
        Treeplex::from_layout(&[(None, actions)]).unwrap()
    }

    #[test]
    fn depth_one_identity() {
        let tp = single(2);
        let plan = behavioral_to_realization(&BehavioralPolicy(vec![0.3, 0.7]), &tp).unwrap();
        assert_eq!(plan.values(), &[0.3, 0.7]);
        let back =
            realization_to_behavioral(&plan, &tp, &BehavioralPolicy::uniform(&tp)).unwrap();
        assert!((back.0[0] - 0.3).abs() < 1e-15 && (back.0[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn chain_product() {
        let tp = Treeplex::from_layout(&[(None, 2), (Some(0), 2)]).unwrap();
        let plan = behavioral_to_realization(&BehavioralPolicy(vec![0.5, 0.5, 0.4, 0.6]), &tp)
            .unwrap();
        assert!((plan[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn uniform_on_t1() {
        let tp = t1();
        let plan = behavioral_to_realization(&BehavioralPolicy::uniform(&tp), &tp).unwrap();
        assert_eq!(plan.values(), &[0.5; 5]);
        assert!(plan.flow_residual(&tp).unwrap() < 1e-15);
    }

    #[test]
    fn zero_mass_uses_fallback() {
        let tp = Treeplex::from_layout(&[(None, 2), (Some(0), 2)]).unwrap();
        let plan = RealizationPlan::from_values(vec![0.0, 1.0, 0.0, 0.0]);
        let pol = realization_to_behavioral(&plan, &tp, &BehavioralPolicy::uniform(&tp)).unwrap();
        assert_eq!(pol.local(&tp, 1), &[0.5, 0.5]);
    }

    #[test]
    fn averaging() {
        let a = RealizationPlan::from_values(vec![0.2, 0.8]);
        let b = RealizationPlan::from_values(vec![0.6, 0.4]);
        let avg = average_realization(&[a.clone(), b]).unwrap();
        assert!((avg[0] - 0.4).abs() < 1e-15 && (avg[1] - 0.6).abs() < 1e-15);
        let same = average_realization(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert_eq!(same, a);
        assert!(matches!(average_realization(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn inner_product_cases() {
        assert_eq!(sequence_inner_product(&[0.3, 0.7], &[1.0, 0.0]).unwrap(), 0.3);
        assert_eq!(sequence_inner_product(&[0.3, 0.7], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            sequence_inner_product(&[0.3], &[0.0, 0.0]),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn kernel_on_t1() {
        let tp = t1();
        let k = compute_balanced_kernel(&tp);
        assert_eq!(k.subtree_actions, vec![5, 1, 1, 1]);
        assert_eq!(k.step[0], 1.0);
        assert_eq!(k.step[1], 1.0);
        assert_eq!(k.step[2], 0.5);
        assert_eq!(k.reach[2], 0.5);
    }

    #[test]
    fn kernel_on_chain_is_one() {
        let tp = Treeplex::from_layout(&[(None, 1), (Some(0), 1), (Some(1), 1), (Some(2), 1)])
            .unwrap();
        let k = compute_balanced_kernel(&tp);
        assert!(k.reach.iter().all(|&r| r == 1.0));
    }

    #[test]
    fn best_response_cases() {
        let tp = single(2);
        let (plan, v) = best_sequence_response(&[0.2, 0.9], &tp).unwrap();
        assert_eq!(plan.values(), &[1.0, 0.0]);
        assert_eq!(v, 0.2);

        let tp = t1();
        let (plan, v) = best_sequence_response(&[0.1, 0.0, 0.0, 0.5, 0.5], &tp).unwrap();
        assert_eq!(plan.values(), &[1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((v - 0.1).abs() < 1e-15);

        // tie: lowest index
        let (plan, _) = best_sequence_response(&[0.5, 0.5], &single(2)).unwrap();
        assert_eq!(plan.values(), &[1.0, 0.0]);
    }

    #[test]
    fn builder_sorts_layout() {
        let mut b = TreeplexBuilder::new();
        let r = b.add(None, 2);
        let deep = b.add(Some((r, 1)), 1);
        let shallow = b.add(Some((r, 0)), 3);
        let (tp, map) = b.finish().unwrap();
        assert_eq!(map[r], 0);
        assert_eq!(map[shallow], 1);
        assert_eq!(map[deep], 2);
        assert_eq!(tp.infoset(1).parent, Some(0));
        assert_eq!(tp.infoset(2).parent, Some(1));
        assert_eq!(tp.num_sequences(), 6);
    }

    #[test]
    fn text_round_trip() {
        let tp = t1();
        let text = tp.to_text();
        assert!(text.starts_with("treeplex H=2 X=4 AX=5\n"));
        assert!(text.contains("infoset 2 depth=2 parent=1 actions=1"));
        let back = Treeplex::from_text(&text).unwrap();
        assert_eq!(back, tp);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn text_rejects_bad_depth() {
        let bad = "treeplex H=2 X=2 AX=3\ninfoset 0 depth=1 parent=ROOT actions=2\ninfoset 1 depth=3 parent=0 actions=1\n";
        assert!(matches!(Treeplex::from_text(bad), Err(Error::Parse { .. })));
    }
}
