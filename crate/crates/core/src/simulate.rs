//! Decentralized greedy routing over a [`CommunityGraph`].
//!
//! A message at community `x` heading for `t` looks only at `x`'s own
//! out-links and forwards to the one closest to `t` in tree distance, ties
//! broken by lowest community id. When no out-link strictly improves on the
//! current distance the configured [`Fallback`] decides what happens.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{lca_height, CommunityId, TreeParams};
use crate::netgen::CommunityGraph;
use crate::rng::{self, TRIAL_DOMAIN};
use crate::stats::{percentile_sorted, Moments};

/// What to do when greedy forwarding stalls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Fallback {
    /// Forward to a uniformly random out-neighbor and keep going.
    #[default]
    RandomNeighbor,
    /// Stop and record a failure.
    FailFast,
}

impl std::str::FromStr for Fallback {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-neighbor" | "random" => Ok(Fallback::RandomNeighbor),
            "fail-fast" => Ok(Fallback::FailFast),
            other => Err(Error::InvalidParam(format!(
                "unknown fallback `{other}` (expected random-neighbor or fail-fast)"
            ))),
        }
    }
}

/// Charging scheme for [`SearchOutcome::modeled_time`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeModel {
    pub kappa3: f64,
    pub omega: f64,
    /// Charge local delivery at every visited community instead of only at
    /// the two endpoints.
    pub per_hop_local: bool,
}

impl Default for TimeModel {
    fn default() -> Self {
        Self { kappa3: 1.0, omega: 0.0, per_hop_local: false }
    }
}

impl TimeModel {
    fn modeled_time(&self, inter_hops: u32, b: u64) -> f64 {
        let local = self.kappa3 * (b as f64).powf(self.omega);
        let hops = inter_hops as f64;
        if self.per_hop_local {
            hops + (hops + 1.0) * local
        } else {
            hops + 2.0 * local
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingConfig {
    pub hop_budget: u32,
    pub fallback: Fallback,
    pub time: TimeModel,
}

impl RoutingConfig {
    /// `max(64, 4 * ceil((log2 N)^2))` hops, random-neighbor fallback.
    pub fn for_tree(tree: &TreeParams) -> Self {
        Self {
            hop_budget: default_hop_budget(tree.communities()),
            fallback: Fallback::default(),
            time: TimeModel::default(),
        }
    }

    pub fn with_fallback(self, fallback: Fallback) -> Self {
        Self { fallback, ..self }
    }
}

pub fn default_hop_budget(communities: u64) -> u32 {
    let l = (communities as f64).log2();
    let k = (l * l).ceil() as u32;
    64.max(4 * k)
}

/// Result of routing one message.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub inter_hops: u32,
    pub success: bool,
    /// Hops taken by the fallback policy rather than by a strict improvement.
    pub fallback_steps: u32,
    pub modeled_time: f64,
}

/// Greedy choice among `links`: the neighbor nearest `dst`, provided it is
/// strictly nearer than `current_distance`.
fn greedy_step(b: u64, links: &[CommunityId], dst: CommunityId, current_distance: u32) -> Option<CommunityId> {
    links
        .iter()
        .map(|&nb| (lca_height(nb.0, dst.0, b), nb))
        .filter(|&(d, _)| d < current_distance)
        .min()
        .map(|(_, nb)| nb)
}

/// Routes one message from `src` to `dst`.
pub fn greedy_route<R: Rng + ?Sized>(
    g: &CommunityGraph,
    src: CommunityId,
    dst: CommunityId,
    cfg: &RoutingConfig,
    rng: &mut R,
) -> Result<SearchOutcome> {
    let tree = g.tree();
    let big_n = tree.communities();
    for c in [src, dst] {
        if c.0 >= big_n {
            return Err(Error::OutOfRange { what: "community id", value: c.0, bound: big_n });
        }
    }
    let b = tree.fanout();
    let mut current = src;
    let mut hops = 0u32;
    let mut fallback_steps = 0u32;
    let success = loop {
        if current == dst {
            break true;
        }
        if hops >= cfg.hop_budget {
            break false;
        }
        let links = g.neighbors(current);
        let distance = lca_height(current.0, dst.0, b);
        current = match greedy_step(b, links, dst, distance) {
            Some(next) => next,
            None => match cfg.fallback {
                Fallback::FailFast => break false,
                Fallback::RandomNeighbor if links.is_empty() => break false,
                Fallback::RandomNeighbor => {
                    fallback_steps += 1;
                    links[rng.random_range(0..links.len())]
                }
            },
        };
        hops += 1;
    };
    Ok(SearchOutcome {
        inter_hops: hops,
        success,
        fallback_steps,
        modeled_time: cfg.time.modeled_time(hops, b),
    })
}

/// One row of per-trial output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub src: u64,
    pub dst: u64,
    pub inter_hops: u32,
    pub success: bool,
    pub fallback_steps: u32,
    pub modeled_time: f64,
}

/// Aggregates over a batch of trials. Hop statistics cover successful
/// trials only and are `None` when there were none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: u64,
    pub successes: u64,
    pub mean_hops: Option<f64>,
    pub std_hops: Option<f64>,
    pub p50: Option<f64>,
    pub p95: Option<f64>,
    pub failure_rate: f64,
}

impl TrialStats {
    /// Normal-approximation 95% confidence interval of the mean hop count.
    pub fn ci95(&self) -> Option<(f64, f64)> {
        let (mean, std) = (self.mean_hops?, self.std_hops?);
        let half = 1.959_963_984_540_054 * std / (self.successes as f64).sqrt();
        Some((mean - half, mean + half))
    }
}

/// Runs `trials` routings between uniformly drawn distinct endpoints and
/// returns every outcome in trial order.
///
/// Trial `i` draws from its own stream keyed by `(seed, i)`, so the output
/// is the same no matter how the work is scheduled.
pub fn run_trials_detailed(
    g: &CommunityGraph,
    trials: u64,
    cfg: &RoutingConfig,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    if trials == 0 {
        return Err(Error::InvalidParam("trial count must be >= 1".into()));
    }
    let big_n = g.tree().communities();
    if big_n < 2 {
        return Err(Error::InvalidParam(
            "routing trials need at least two communities".into(),
        ));
    }
    (0..trials)
        .into_par_iter()
        .map(|trial_id| {
            let mut rng = rng::stream(seed, TRIAL_DOMAIN, trial_id);
            let src = rng.random_range(0..big_n);
            let dst = loop {
                let d = rng.random_range(0..big_n);
                if d != src {
                    break d;
                }
            };
            let o = greedy_route(g, CommunityId(src), CommunityId(dst), cfg, &mut rng)?;
            Ok(TrialRecord {
                trial_id,
                src,
                dst,
                inter_hops: o.inter_hops,
                success: o.success,
                fallback_steps: o.fallback_steps,
                modeled_time: o.modeled_time,
            })
        })
        .collect()
}

const MERGE_CHUNK: usize = 1024;

/// Summarizes per-trial records. Moments are accumulated per fixed-size
/// chunk and merged in order.
pub fn summarize(records: &[TrialRecord]) -> TrialStats {
    let moments = records
        .par_chunks(MERGE_CHUNK)
        .map(|chunk| {
            let mut m = Moments::default();
            chunk.iter().filter(|r| r.success).for_each(|r| m.push(r.inter_hops as f64));
            m
        })
        .collect::<Vec<_>>()
        .iter()
        .fold(Moments::default(), |acc, m| acc.merge(m));
    let mut hops: Vec<f64> =
        records.iter().filter(|r| r.success).map(|r| r.inter_hops as f64).collect();
    hops.sort_by(f64::total_cmp);
    let trials = records.len() as u64;
    let some = moments.count > 0;
    TrialStats {
        trials,
        successes: moments.count,
        mean_hops: some.then_some(moments.mean),
        std_hops: some.then(|| moments.std_dev()),
        p50: percentile_sorted(&hops, 50.0),
        p95: percentile_sorted(&hops, 95.0),
        failure_rate: if trials == 0 { 0.0 } else { (trials - moments.count) as f64 / trials as f64 },
    }
}

pub fn run_trials(g: &CommunityGraph, trials: u64, cfg: &RoutingConfig, seed: u64) -> Result<TrialStats> {
    Ok(summarize(&run_trials_detailed(g, trials, cfg, seed)?))
}

/// Writes per-trial records as CSV with a header row.
pub fn write_trials_csv<W: Write>(records: &[TrialRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Largest graph the exhaustive oracle accepts.
pub const EXHAUSTIVE_LIMIT: u64 = 256;

/// Mean greedy hop count over every ordered pair `src != dst` under
/// fail-fast routing, averaged over the pairs that succeed.
pub fn exhaustive_mean_hops(g: &CommunityGraph, cfg: &RoutingConfig) -> Result<f64> {
    let big_n = g.tree().communities();
    if big_n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge { communities: big_n, limit: EXHAUSTIVE_LIMIT });
    }
    let cfg = cfg.with_fallback(Fallback::FailFast);
    // fail-fast never draws, but greedy_route still wants a generator
    let mut idle = rng::stream(0, 0, 0);
    let mut m = Moments::default();
    for src in 0..big_n {
        for dst in (0..big_n).filter(|&d| d != src) {
            let o = greedy_route(g, CommunityId(src), CommunityId(dst), &cfg, &mut idle)?;
            if o.success {
                m.push(o.inter_hops as f64);
            }
        }
    }
    if m.count == 0 {
        return Err(Error::InsufficientData("no ordered pair routes successfully".into()));
    }
    Ok(m.mean)
}

/// Directed shortest-path length over out-links, or `None` if `dst` is
/// unreachable.
pub fn bfs_shortest_hops(g: &CommunityGraph, src: CommunityId, dst: CommunityId) -> Option<u32> {
    let big_n = g.len();
    if src.0 as usize >= big_n || dst.0 as usize >= big_n {
        return None;
    }
    if src == dst {
        return Some(0);
    }
    let mut dist = vec![u32::MAX; big_n];
    dist[src.0 as usize] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(x) = queue.pop_front() {
        let next = dist[x.0 as usize] + 1;
        for &nb in g.neighbors(x) {
            if dist[nb.0 as usize] == u32::MAX {
                if nb == dst {
                    return Some(next);
                }
                dist[nb.0 as usize] = next;
                queue.push_back(nb);
            }
        }
    }
    None
}
