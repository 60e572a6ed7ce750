//! Restricted volume doubling for hop balls under the empirical and
//! degree-volume measures.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::distance::Verdict;
use crate::error::{domain, Result};
use crate::geograph::{max_hops, Graph, GraphMeasure, MeasureKind, Openness, UNREACHABLE};
use crate::tolerant_ceil;

fn check_lambdas(lambda1: f64, lambda2: f64, v: f64) -> Result<()> {
    if !(lambda1 > 0.0 && lambda1 < 1.0 && lambda2 > 0.0 && lambda2 < 1.0) {
        return domain("lambda1 and lambda2 must lie in (0, 1)");
    }
    if v.is_nan() || v <= 0.0 {
        return domain("doubling exponent v must be positive");
    }
    Ok(())
}

/// log2(6) + ceil(4 + log2((1 + lambda2)/(1 - lambda1))) v, open balls.
pub fn exponent_u_open(lambda1: f64, lambda2: f64, v: f64) -> Result<f64> {
    check_lambdas(lambda1, lambda2, v)?;
    let inner = 4.0 + ((1.0 + lambda2) / (1.0 - lambda1)).log2();
    Ok(6f64.log2() + tolerant_ceil(inner) * v)
}

/// log2(6) + ceil(4 + log2 3) v = log2(6) + 6 v, closed balls.
pub fn exponent_u_closed(v: f64) -> Result<f64> {
    if v.is_nan() || v <= 0.0 {
        return domain("doubling exponent v must be positive");
    }
    Ok(6f64.log2() + tolerant_ceil(4.0 + 3f64.log2()) * v)
}

/// Closed-ball exponent plus 2 log2(c_bullet), c_bullet = deg_max / deg_min.
pub fn exponent_u_degree(v: f64, c_bullet: f64) -> Result<f64> {
    if c_bullet.is_nan() || c_bullet < 1.0 {
        return domain("c_bullet must be at least 1");
    }
    Ok(exponent_u_closed(v)? + 2.0 * c_bullet.log2())
}

/// 8 ln(c n^2 / p2) / n; c = 3 in the doubling hypothesis, 4 in the
/// concentration bound it relies on.
pub fn mass_floor_with(n: usize, p2: f64, c: f64) -> Result<f64> {
    if !(p2 > 0.0 && p2 <= 0.5) || n == 0 {
        return domain("need n >= 1 and p2 in (0, 0.5]");
    }
    let nf = n as f64;
    Ok(8.0 * (c * nf * nf / p2).ln() / nf)
}

/// 8 ln(3 n^2 / p2) / n.
pub fn mass_floor(n: usize, p2: f64) -> Result<f64> {
    mass_floor_with(n, p2, 3.0)
}

/// The larger of the two floors; governs qualification by default.
pub fn strict_mass_floor(n: usize, p2: f64) -> Result<f64> {
    mass_floor_with(n, p2, 4.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallRatio {
    pub center: usize,
    pub r: f64,
    pub inner_mass: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub measure_kind: MeasureKind,
    pub openness: Openness,
    pub r_grid: Vec<f64>,
    pub floor: f64,
    pub total_balls: usize,
    pub qualifying_balls: usize,
    /// Max ratio over qualifying balls (1 when none qualify).
    pub max_ratio: f64,
    /// Max ratio over all balls.
    pub max_ratio_all: f64,
    pub exponent_u: f64,
    pub bound: f64,
    pub violations: Vec<BallRatio>,
    /// Violations among balls below the floor; recorded, not failing.
    pub sub_floor_violations: Vec<BallRatio>,
    pub verdict: Verdict,
}

impl DoublingReport {
    pub fn write_csv_header<W: Write>(mut w: W) -> Result<()> {
        writeln!(w, "center,r,inner_mass,ratio")?;
        Ok(())
    }
}

/// Radius grid: integers and half-integers in (1, diameter].
pub fn r_grid(diameter: u32) -> Vec<f64> {
    (3..=2 * diameter as usize).map(|h| h as f64 / 2.0).collect()
}

/// Cumulative weight of vertices within h hops, h = 0..=eccentricity, for
/// each weight vector, from a single BFS.
fn hop_profiles<const M: usize>(graph: &Graph, weights: [&[f64]; M], center: usize) -> [Vec<f64>; M] {
    let dist = graph.sp_distances_from(center);
    let ecc = dist.iter().filter(|&&d| d != UNREACHABLE).max().copied().unwrap_or(0) as usize;
    weights.map(|w| {
        let mut layer = vec![0.0; ecc + 1];
        for (v, &d) in dist.iter().enumerate() {
            if d != UNREACHABLE {
                layer[d as usize] += w[v];
            }
        }
        let mut acc = 0.0;
        layer
            .into_iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect()
    })
}

fn mass_at(profile: &[f64], r: f64, openness: Openness) -> f64 {
    match max_hops(r, openness) {
        None => 0.0,
        Some(h) => profile[(h as usize).min(profile.len() - 1)],
    }
}

/// Checks eta(B(x, 2r)) <= 2^u eta(B(x, r)) for all centers and radii whose
/// inner ball carries empirical mass at least `floor`.
///
/// Uses one BFS per center. With `r_values = None` the grid is the integers
/// and half-integers in (1, hop diameter].
pub fn certify_vd(
    graph: &Graph,
    measure: &GraphMeasure,
    r_values: Option<&[f64]>,
    floor: f64,
    exponent_u: f64,
    openness: Openness,
) -> Result<DoublingReport> {
    graph.require_connected()?;
    let n = graph.n();
    let uniform = vec![1.0 / n as f64; n];
    let profiles: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .map(|c| {
            let [mass, count] = hop_profiles(graph, [&measure.weights, &uniform], c);
            (mass, count)
        })
        .collect();
    let diameter = profiles.iter().map(|p| p.0.len() as u32 - 1).max().unwrap_or(0);
    let grid = match r_values {
        Some(r) => {
            if r.iter().any(|&x| x.is_nan() || x <= 0.0) {
                return domain("radii must be positive");
            }
            r.to_vec()
        }
        None => r_grid(diameter),
    };
    let bound = 2f64.powf(exponent_u);
    let mut report = DoublingReport {
        measure_kind: measure.kind,
        openness,
        r_grid: grid.clone(),
        floor,
        total_balls: 0,
        qualifying_balls: 0,
        max_ratio: 1.0,
        max_ratio_all: 1.0,
        exponent_u,
        bound,
        violations: Vec::new(),
        sub_floor_violations: Vec::new(),
        verdict: Verdict::Pass,
    };
    for (c, (prof, count)) in profiles.iter().enumerate() {
        for &r in &grid {
            let inner = mass_at(prof, r, openness);
            let outer = mass_at(prof, 2.0 * r, openness);
            if inner <= 0.0 {
                continue;
            }
            let ratio = outer / inner;
            let eta1 = mass_at(count, r, openness);
            report.total_balls += 1;
            report.max_ratio_all = report.max_ratio_all.max(ratio);
            let entry = BallRatio { center: c, r, inner_mass: eta1, ratio };
            if eta1 >= floor {
                report.qualifying_balls += 1;
                report.max_ratio = report.max_ratio.max(ratio);
                if ratio > bound {
                    report.violations.push(entry);
                }
            } else if ratio > bound {
                report.sub_floor_violations.push(entry);
            }
        }
    }
    report.verdict = Verdict::from_pass(report.violations.is_empty());
    Ok(report)
}

/// c_bullet^-1 eta1(B) <= eta2(B) <= c_bullet eta1(B) for each given set.
/// Returns (c_bullet, worst ratio eta2/eta1, best ratio, all inside).
pub fn transfer_check(graph: &Graph, sets: &[Vec<usize>]) -> Result<(f64, f64, f64, bool)> {
    let dmin = graph.min_degree();
    if dmin == 0 {
        return domain("degree transfer needs positive degrees");
    }
    let c_bullet = graph.max_degree() as f64 / dmin as f64;
    let e1 = GraphMeasure::empirical(graph.n());
    let e2 = GraphMeasure::degree_volume(graph)?;
    let mut hi: f64 = 0.0;
    let mut lo = f64::INFINITY;
    for s in sets.iter().filter(|s| !s.is_empty()) {
        let q = e2.measure_of(s) / e1.measure_of(s);
        hi = hi.max(q);
        lo = lo.min(q);
    }
    let tol = 1e-12;
    let ok = hi <= c_bullet * (1.0 + tol) && lo >= (1.0 - tol) / c_bullet;
    Ok((c_bullet, hi, lo, ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_half_steps() {
        assert_eq!(r_grid(3), vec![1.5, 2.0, 2.5, 3.0]);
        assert!(r_grid(1).is_empty());
    }

    #[test]
    fn profile_is_cumulative() {
        let g = Graph::path(4);
        let [p] = hop_profiles(&g, [&[1.0; 4]], 0);
        assert_eq!(p, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mass_at(&p, 1.0, Openness::Open), 1.0);
        assert_eq!(mass_at(&p, 1.0, Openness::Closed), 2.0);
        assert_eq!(mass_at(&p, 10.0, Openness::Closed), 4.0);
    }
}
