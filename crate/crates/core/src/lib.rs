//! Decentralized search over hierarchical community networks.
//!
//! * [`hierarchy`]: leaf and community identities on a balanced `b`-ary
//!   tree, and tree (social) distance.
//! * [`netgen`]: the community-level random graph with distance-decaying
//!   out-links.
//! * [`simulate`]: greedy routing using only local links, plus BFS and
//!   exhaustive oracles.
//! * [`costmodel`]: participation costs, communication times, and the
//!   community size that balances them.
//! * [`experiments`]: fixed-fanout and hybrid sweeps, scaling fits, and
//!   CSV/JSON output.

pub mod costmodel;
pub mod error;
pub mod experiments;
pub mod hierarchy;
pub mod netgen;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use costmodel::{
    comm_times, fit_scaling_exponent, objective, objective_gradient, optimal_fanout,
    participation_costs, predicted_total_time, solve_stationarity, stationarity_residual,
    Boundary, CostBreakdown, CostParams, OptimumReport, ScalingFit, Variant,
};
pub use error::{Error, Result};
pub use experiments::{FitReport, SweepParams, SweepRecord};
pub use hierarchy::{CommunityId, NodeId, TreeParams};
pub use netgen::{generate, link_distance_pmf, sample_neighbor, CommunityGraph, GraphParams, LinkDistancePmf};
pub use simulate::{
    bfs_shortest_hops, exhaustive_mean_hops, greedy_route, run_trials, Fallback, RoutingConfig,
    SearchOutcome, TrialStats,
};
