//! Community-level random graph with distance-decaying out-links.
//!
//! Communities are the vertices. Each one draws `min(k, N-1)` distinct
//! out-links where a link to a community at tree distance `d` has weight
//! `b^(-beta*d)`. Sampling goes in two steps: pick a distance class from
//! [`LinkDistancePmf`], then pick uniformly inside that class. Members of a
//! community form an implicit clique that is never stored.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{lca_height, nth_at_distance_unchecked, CommunityId, TreeParams};
use crate::rng::{self, GRAPH_DOMAIN};

/// Inputs for graph generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    pub tree: TreeParams,
    /// Link-decay exponent.
    pub beta: f64,
    /// Constant `c_k` in the out-degree target `c_k * (log2 N)^2`.
    pub degree_coeff: f64,
    pub seed: u64,
}

impl GraphParams {
    pub fn new(tree: TreeParams, beta: f64, degree_coeff: f64, seed: u64) -> Result<Self> {
        let p = Self { tree, beta, degree_coeff, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParam(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.degree_coeff > 0.0 && self.degree_coeff.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "degree coefficient c_k must be > 0, got {}",
                self.degree_coeff
            )));
        }
        Ok(())
    }

    /// `max(1, ceil(c_k * (log2 N)^2))`.
    pub fn k_target(&self) -> u64 {
        let log_n = (self.tree.communities() as f64).log2();
        let k = (self.degree_coeff * log_n * log_n).ceil();
        (k as u64).max(1)
    }

    /// Out-degree every community actually receives.
    pub fn realized_degree(&self) -> u64 {
        self.k_target().min(self.tree.communities() - 1)
    }
}

/// Probability that a sampled link spans each community distance `d = 1..=H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDistancePmf {
    /// `probs[d - 1]` is the probability of distance `d`.
    probs: Vec<f64>,
}

impl LinkDistancePmf {
    /// Class `d` holds `(b-1) b^(d-1)` communities of weight `b^(-beta d)` each,
    /// so its mass is `((b-1)/b) * b^((1-beta) d)`. Computed in log space so
    /// large `H` with small `beta` cannot overflow.
    pub fn new(tree: &TreeParams, beta: f64) -> Result<Self> {
        let big_h = tree.community_height();
        if big_h == 0 {
            return Err(Error::EmptyPmf);
        }
        let ln_b = (tree.fanout() as f64).ln();
        let slope = (1.0 - beta) * ln_b;
        let logs: Vec<f64> = (1..=big_h).map(|d| slope * d as f64).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = weights.iter().sum();
        Ok(Self { probs: weights.into_iter().map(|w| w / z).collect() })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of distance `d` (zero outside `1..=H`).
    pub fn prob(&self, d: u32) -> f64 {
        match d {
            0 => 0.0,
            d => self.probs.get(d as usize - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn max_distance(&self) -> u32 {
        self.probs.len() as u32
    }

    fn sample_distance<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i as u32 + 1;
            }
        }
        // u landed in the rounding slack above the final partial sum
        self.probs.len() as u32
    }
}

/// `link_distance_pmf` as a free function.
pub fn link_distance_pmf(g: &GraphParams) -> Result<LinkDistancePmf> {
    LinkDistancePmf::new(&g.tree, g.beta)
}

/// Unnormalized total link weight seen from one community:
/// `Z = sum_d (b-1) b^(d-1) b^(-beta d)`. At `beta = 1` this is `H (b-1)/b`.
pub fn link_normalizer(tree: &TreeParams, beta: f64) -> f64 {
    let b = tree.fanout() as f64;
    (1..=tree.community_height())
        .map(|d| (b - 1.0) * b.powi(d as i32 - 1) * b.powf(-beta * d as f64))
        .sum()
}

/// Draws single neighbors for communities of one tree.
#[derive(Debug, Clone)]
pub struct NeighborSampler {
    tree: TreeParams,
    pmf: LinkDistancePmf,
}

impl NeighborSampler {
    pub fn new(g: &GraphParams) -> Result<Self> {
        if g.tree.communities() < 2 {
            return Err(Error::EmptyPmf);
        }
        Ok(Self { tree: g.tree, pmf: link_distance_pmf(g)? })
    }

    pub fn pmf(&self) -> &LinkDistancePmf {
        &self.pmf
    }

    /// A random community other than `c`, chosen with probability
    /// proportional to `b^(-beta * distance)`.
    pub fn sample<R: Rng + ?Sized>(&self, c: CommunityId, rng: &mut R) -> CommunityId {
        let b = self.tree.fanout();
        let d = self.pmf.sample_distance(rng);
        let count = (b - 1) * b.pow(d - 1);
        let index = rng.random_range(0..count);
        CommunityId(nth_at_distance_unchecked(c.0, b, d, index))
    }
}

/// One neighbor draw for `c`. Requires at least two communities.
pub fn sample_neighbor<R: Rng + ?Sized>(
    c: CommunityId,
    g: &GraphParams,
    rng: &mut R,
) -> Result<CommunityId> {
    if c.0 >= g.tree.communities() {
        return Err(Error::OutOfRange {
            what: "community id",
            value: c.0,
            bound: g.tree.communities(),
        });
    }
    Ok(NeighborSampler::new(g)?.sample(c, rng))
}

/// Directed community graph. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityGraph {
    params: GraphParams,
    k_target: u64,
    out_links: Vec<Vec<CommunityId>>,
}

impl CommunityGraph {
    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    pub fn tree(&self) -> &TreeParams {
        &self.params.tree
    }

    pub fn k_target(&self) -> u64 {
        self.k_target
    }

    pub fn len(&self) -> usize {
        self.out_links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out_links.is_empty()
    }

    /// Out-links of `c`, ascending. Panics if `c` is out of range.
    pub fn neighbors(&self, c: CommunityId) -> &[CommunityId] {
        &self.out_links[c.0 as usize]
    }

    pub fn out_links(&self) -> &[Vec<CommunityId>] {
        &self.out_links
    }

    /// Builds a graph from explicit adjacency, checking every structural
    /// invariant (ids in range, no self-links, no duplicates, exact degree).
    pub fn from_links(params: GraphParams, out_links: Vec<Vec<CommunityId>>) -> Result<Self> {
        params.validate()?;
        let big_n = params.tree.communities();
        if out_links.len() as u64 != big_n {
            return Err(Error::InvalidParam(format!(
                "expected {big_n} adjacency lists, got {}",
                out_links.len()
            )));
        }
        let degree = params.realized_degree();
        for (c, links) in out_links.iter().enumerate() {
            let mut seen = HashSet::with_capacity(links.len());
            for &nb in links {
                if nb.0 >= big_n {
                    return Err(Error::OutOfRange { what: "neighbor id", value: nb.0, bound: big_n });
                }
                if nb.0 == c as u64 {
                    return Err(Error::InvalidParam(format!("community {c} links to itself")));
                }
                if !seen.insert(nb) {
                    return Err(Error::InvalidParam(format!("community {c} lists {nb} twice")));
                }
            }
            if links.len() as u64 != degree {
                return Err(Error::InvalidParam(format!(
                    "community {c} has out-degree {}, expected {degree}",
                    links.len()
                )));
            }
        }
        Ok(Self { params, k_target: params.k_target(), out_links })
    }

    /// Writes the line-oriented text form.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = format!(
            "# b={} h={} beta={} c_k={} seed={}\n",
            p.tree.fanout(),
            p.tree.height(),
            p.beta,
            p.degree_coeff,
            p.seed
        );
        for (c, links) in self.out_links.iter().enumerate() {
            let _ = write!(s, "{c}:");
            for nb in links {
                let _ = write!(s, " {nb}");
            }
            s.push('\n');
        }
        s
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(l) if l.trim().is_empty() => None,
            other => Some((i + 1, other)),
        });
        let (line_no, header) = lines
            .next()
            .ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let params = parse_header(&header?).map_err(|msg| Error::Parse { line: line_no, msg })?;
        let big_n = params.tree.communities();
        let mut slots: Vec<Option<Vec<CommunityId>>> = vec![None; big_n as usize];
        for (line_no, line) in lines {
            let line = line?;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let (id, rest) = line
                .split_once(':')
                .ok_or_else(|| err("expected `<community_id>: <neighbors...>`".into()))?;
            let id: u64 = id.trim().parse().map_err(|e| err(format!("bad community id: {e}")))?;
            if id >= big_n {
                return Err(err(format!("community id {id} >= {big_n}")));
            }
            let links = rest
                .split_whitespace()
                .map(|t| t.parse().map(CommunityId))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(format!("bad neighbor id: {e}")))?;
            let slot = &mut slots[id as usize];
            if slot.is_some() {
                return Err(err(format!("community {id} listed twice")));
            }
            *slot = Some(links);
        }
        let out_links = slots
            .into_iter()
            .enumerate()
            .map(|(c, s)| {
                s.ok_or(Error::Parse { line: 0, msg: format!("community {c} missing") })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_links(params, out_links)
    }
}

impl std::str::FromStr for CommunityGraph {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::read_text(s.as_bytes())
    }
}

fn parse_header(line: &str) -> std::result::Result<GraphParams, String> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| "header must start with `#`".to_string())?;
    let (mut b, mut h, mut beta, mut c_k, mut seed) = (None, None, None, None, None);
    for field in body.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("malformed header field `{field}`"))?;
        let bad = |e: &dyn std::fmt::Display| format!("bad value for {key}: {e}");
        match key {
            "b" => b = Some(value.parse::<u64>().map_err(|e| bad(&e))?),
            "h" => h = Some(value.parse::<u32>().map_err(|e| bad(&e))?),
            "beta" => beta = Some(value.parse::<f64>().map_err(|e| bad(&e))?),
            "c_k" => c_k = Some(value.parse::<f64>().map_err(|e| bad(&e))?),
            "seed" => seed = Some(value.parse::<u64>().map_err(|e| bad(&e))?),
            _ => return Err(format!("unknown header key `{key}`")),
        }
    }
    let missing = |k: &str| format!("header missing `{k}`");
    let tree = TreeParams::new(b.ok_or_else(|| missing("b"))?, h.ok_or_else(|| missing("h"))?)
        .map_err(|e| e.to_string())?;
    GraphParams::new(
        tree,
        beta.ok_or_else(|| missing("beta"))?,
        c_k.ok_or_else(|| missing("c_k"))?,
        seed.ok_or_else(|| missing("seed"))?,
    )
    .map_err(|e| e.to_string())
}

/// Samples the community graph. Each community uses its own RNG stream, so
/// the result is independent of thread scheduling.
pub fn generate(g: &GraphParams) -> Result<CommunityGraph> {
    g.validate()?;
    let big_n = g.tree.communities();
    let sampler = if big_n >= 2 { Some(NeighborSampler::new(g)?) } else { None };
    let out_links = (0..big_n)
        .into_par_iter()
        .map(|c| match &sampler {
            Some(s) => community_links(g, s, CommunityId(c)),
            None => Vec::new(),
        })
        .collect();
    Ok(CommunityGraph { params: *g, k_target: g.k_target(), out_links })
}

/// Out-links of a single community, ascending.
pub(crate) fn community_links(
    g: &GraphParams,
    sampler: &NeighborSampler,
    c: CommunityId,
) -> Vec<CommunityId> {
    let big_n = g.tree.communities();
    let degree = g.realized_degree() as usize;
    if degree as u64 == big_n - 1 {
        return (0..big_n).filter(|&x| x != c.0).map(CommunityId).collect();
    }
    let mut rng = rng::stream(g.seed, GRAPH_DOMAIN, c.0);
    let mut chosen = HashSet::with_capacity(degree);
    let max_draws = 64 * g.k_target();
    let mut draws = 0;
    while chosen.len() < degree && draws < max_draws {
        chosen.insert(sampler.sample(c, &mut rng));
        draws += 1;
    }
    if chosen.len() < degree {
        log::debug!(
            "community {c}: rejection sampling capped at {max_draws} draws, \
             completing by weighted selection without replacement"
        );
        weighted_fill(g, c, &mut chosen, degree, &mut rng);
    }
    let mut links: Vec<_> = chosen.into_iter().collect();
    links.sort_unstable();
    links
}

/// Efraimidis-Spirakis selection over the remaining candidates: key
/// `ln(u) / w`, keep the largest keys.
fn weighted_fill<R: Rng + ?Sized>(
    g: &GraphParams,
    c: CommunityId,
    chosen: &mut HashSet<CommunityId>,
    degree: usize,
    rng: &mut R,
) {
    let b = g.tree.fanout();
    let ln_b = (b as f64).ln();
    let mut keyed: Vec<(f64, CommunityId)> = (0..g.tree.communities())
        .map(CommunityId)
        .filter(|x| *x != c && !chosen.contains(x))
        .map(|x| {
            let d = lca_height(c.0, x.0, b) as f64;
            let log_w = -g.beta * d * ln_b;
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            (u.ln() * (-log_w).exp(), x)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let need = degree - chosen.len();
    chosen.extend(keyed.into_iter().take(need).map(|(_, x)| x));
}
