//! Comparisons between hop distance, Euclidean graph distance and geodesic
//! distance on the manifold.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{domain, Result};
use crate::geograph::{EpsilonGraph, UNREACHABLE};
use crate::manifold::ManifoldModel;
use crate::params::AssumptionParams;
use crate::rng;

/// Pair sets up to this size are checked exhaustively.
pub const EXHAUSTIVE_MAX_N: usize = 600;
pub const SAMPLED_SOURCES: usize = 100;
pub const SAMPLED_TARGETS: usize = 100;

/// Relative slack absorbing float rounding in sums of edge lengths.
const ROUNDING: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_pass(ok: bool) -> Self {
        if ok { Verdict::Pass } else { Verdict::Fail }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub theorem: String,
    pub params: Value,
    pub pairs_checked: usize,
    pub violations: Vec<Violation>,
    /// Largest of lhs/mid and mid/rhs over checked pairs; above 1 means a violation.
    pub max_slack: f64,
    pub assumptions_met: bool,
    pub verdict: Verdict,
}

impl DistanceReport {
    pub fn violation_fraction(&self) -> f64 {
        if self.pairs_checked == 0 {
            0.0
        } else {
            self.violations.len() as f64 / self.pairs_checked as f64
        }
    }

    fn finish(theorem: &str, params: Value, acc: Accumulator, assumptions_met: bool) -> Self {
        let verdict = Verdict::from_pass(acc.violations.is_empty());
        Self {
            theorem: theorem.into(),
            params,
            pairs_checked: acc.pairs,
            violations: acc.violations,
            max_slack: acc.max_slack,
            assumptions_met,
            verdict,
        }
    }
}

#[derive(Default)]
struct Accumulator {
    pairs: usize,
    violations: Vec<Violation>,
    max_slack: f64,
}

impl Accumulator {
    fn check(&mut self, i: usize, j: usize, lhs: f64, mid: f64, rhs: f64, tol: f64) {
        self.pairs += 1;
        if mid > 0.0 {
            self.max_slack = self.max_slack.max(lhs / mid);
        }
        if rhs > 0.0 {
            self.max_slack = self.max_slack.max(mid / rhs);
        }
        let scale = rhs.abs().max(mid.abs()).max(lhs.abs());
        if lhs > mid + tol * scale || mid > rhs + tol * scale {
            self.violations.push(Violation { i, j, lhs, mid, rhs });
        }
    }
}

/// Which vertex pairs a check visits.
#[derive(Clone, Debug, PartialEq)]
pub enum PairPlan {
    /// All unordered pairs (including x = y).
    Exhaustive,
    /// `sources` distinct sources, each with `targets` distinct targets.
    Sampled { seed: u64, sources: usize, targets: usize },
}

impl PairPlan {
    pub fn for_size(n: usize, seed: u64) -> Self {
        if n <= EXHAUSTIVE_MAX_N {
            PairPlan::Exhaustive
        } else {
            PairPlan::Sampled { seed, sources: SAMPLED_SOURCES, targets: SAMPLED_TARGETS }
        }
    }

    /// Pairs grouped by source: (source, targets).
    pub fn groups(&self, n: usize) -> Vec<(usize, Vec<usize>)> {
        match *self {
            PairPlan::Exhaustive => (0..n).map(|i| (i, (i..n).collect())).collect(),
            PairPlan::Sampled { seed, sources, targets } => {
                let mut r = rng::stream(seed, rng::PAIRS);
                let mut srcs = sample(&mut r, n, sources.min(n)).into_vec();
                srcs.sort_unstable();
                srcs.into_iter()
                    .map(|s| {
                        let mut t = sample(&mut r, n, targets.min(n)).into_vec();
                        t.sort_unstable();
                        (s, t)
                    })
                    .collect()
            }
        }
    }

    fn describe(&self) -> Value {
        match self {
            PairPlan::Exhaustive => json!("exhaustive"),
            PairPlan::Sampled { seed, sources, targets } => {
                json!({"seed": seed, "sources": sources, "targets": targets})
            }
        }
    }
}

/// eps/4 (d_SP - 1) <= d_GE <= eps d_SP on all checked pairs.
pub fn check_sandwich_sp_ge(graph: &EpsilonGraph, plan: &PairPlan) -> Result<DistanceReport> {
    graph.graph().require_connected()?;
    let eps = graph.epsilon();
    let mut acc = Accumulator::default();
    for (s, targets) in plan.groups(graph.n()) {
        let hops = graph.graph().sp_distances_from(s);
        let ge = graph.euclidean_distances_from(s);
        for t in targets {
            let h = hops[t] as f64;
            acc.check(s, t, 0.25 * eps * (h - 1.0).max(0.0), ge[t], eps * h, ROUNDING);
        }
    }
    Ok(DistanceReport::finish(
        "sp_ge_sandwich",
        json!({"epsilon": eps, "pairs": plan.describe()}),
        acc,
        true,
    ))
}

/// Numeric evaluation of the sampling assumptions on (epsilon, n).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A3Check {
    pub epsilon: f64,
    pub epsilon_bound: f64,
    pub epsilon_ok: bool,
    /// inf_z mu(B(z, eps lambda2 / 16))
    pub u: f64,
    pub n: usize,
    pub n_threshold: f64,
    pub n_ok: bool,
}

impl A3Check {
    pub fn passed(&self) -> bool {
        self.epsilon_ok && self.n_ok
    }
}

/// eps < min(s0, (2/pi) r0 sqrt(24 lambda1)) and n >= -ln(p1 u)/u.
pub fn a3_check(model: &ManifoldModel, n: usize, epsilon: f64, params: &AssumptionParams) -> Result<A3Check> {
    params.validate()?;
    let geodesic_cap = 2.0 / std::f64::consts::PI * model.r0 * (24.0 * params.lambda1).sqrt();
    let epsilon_bound = model.s0.min(geodesic_cap);
    let u = model.min_ball_measure(epsilon * params.lambda2 / 16.0)?;
    if u <= 0.0 {
        return domain("assumption check needs epsilon > 0");
    }
    let n_threshold = -(params.p1 * u).ln() / u;
    Ok(A3Check {
        epsilon,
        epsilon_bound,
        epsilon_ok: epsilon < epsilon_bound,
        u,
        n,
        n_threshold,
        n_ok: n as f64 >= n_threshold,
    })
}

/// (1 - lambda1) d_M <= d_GE <= (1 + lambda2) d_M on the checked pairs.
pub fn check_ge_vs_manifold(
    graph: &EpsilonGraph,
    model: &ManifoldModel,
    params: &AssumptionParams,
    plan: &PairPlan,
) -> Result<DistanceReport> {
    graph.graph().require_connected()?;
    let a3 = a3_check(model, graph.n(), graph.epsilon(), params)?;
    let pts = graph.points();
    for p in pts.iter() {
        model.check_point(p)?;
    }
    let mut acc = Accumulator::default();
    for (s, targets) in plan.groups(graph.n()) {
        let ge = graph.euclidean_distances_from(s);
        for t in targets {
            let dm = model.geodesic_distance_unchecked(pts.point(s), pts.point(t));
            acc.check(s, t, (1.0 - params.lambda1) * dm, ge[t], (1.0 + params.lambda2) * dm, 0.0);
        }
    }
    Ok(DistanceReport::finish(
        "ge_vs_manifold",
        json!({
            "epsilon": graph.epsilon(),
            "lambda1": params.lambda1,
            "lambda2": params.lambda2,
            "pairs": plan.describe(),
            "a3": a3,
        }),
        acc,
        a3.passed(),
    ))
}

/// B_SP(x, r) within B_M(x, eps r / (1 - lambda1)) and
/// B_M(x, r) within B_SP(x, 4 (1 + lambda2) r / eps + 1), open balls.
///
/// Hop radii are given in `hop_radii`, geodesic radii in `geodesic_radii`.
/// A violation records (center, vertex, radius, offending distance, limit).
pub fn check_ball_inclusions(
    graph: &EpsilonGraph,
    model: &ManifoldModel,
    params: &AssumptionParams,
    hop_radii: &[f64],
    geodesic_radii: &[f64],
    centers: &[usize],
) -> Result<DistanceReport> {
    graph.graph().require_connected()?;
    let a3 = a3_check(model, graph.n(), graph.epsilon(), params)?;
    let eps = graph.epsilon();
    let pts = graph.points();
    let mut acc = Accumulator::default();
    for &c in centers {
        let hops = graph.graph().sp_distances_from(c);
        let dm: Vec<f64> = (0..graph.n()).map(|v| model.geodesic_distance_unchecked(pts.point(c), pts.point(v))).collect();
        for &r in hop_radii {
            let limit = eps * r / (1.0 - params.lambda1);
            for v in 0..graph.n() {
                if hops[v] != UNREACHABLE && (hops[v] as f64) < r {
                    acc.pairs += 1;
                    if dm[v] >= limit {
                        acc.violations.push(Violation { i: c, j: v, lhs: r, mid: dm[v], rhs: limit });
                    }
                }
            }
        }
        for &r in geodesic_radii {
            let limit = 4.0 * (1.0 + params.lambda2) * r / eps + 1.0;
            for v in 0..graph.n() {
                if dm[v] < r {
                    acc.pairs += 1;
                    if hops[v] as f64 >= limit {
                        acc.violations.push(Violation { i: c, j: v, lhs: r, mid: hops[v] as f64, rhs: limit });
                    }
                }
            }
        }
    }
    Ok(DistanceReport::finish(
        "ball_inclusions",
        json!({
            "epsilon": eps,
            "lambda1": params.lambda1,
            "lambda2": params.lambda2,
            "hop_radii": hop_radii,
            "geodesic_radii": geodesic_radii,
            "centers": centers.len(),
            "a3": a3,
        }),
        acc,
        a3.passed(),
    ))
}
