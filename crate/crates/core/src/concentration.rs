//! Binomial tail bounds and the uniform square-root deviation statistic.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::manifold::{ManifoldModel, PointCloud};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    ChernoffLower,
    ChernoffUpper,
    OkamotoUp,
    OkamotoDown,
}

/// exp(-delta^2 n p / 3) for either Chernoff tail.
pub fn chernoff_bound(kind: TailKind, n: f64, p: f64, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || n < 0.0 {
        return domain("need n >= 0 and p in [0, 1]");
    }
    let ok = match kind {
        TailKind::ChernoffLower => delta > 0.0 && delta < 1.0,
        TailKind::ChernoffUpper => delta > 0.0 && delta <= 1.0,
        _ => return domain("not a Chernoff tail"),
    };
    if !ok {
        return domain(format!("delta {delta} outside its range"));
    }
    Ok((-delta * delta * n * p / 3.0).exp())
}

/// exp(-2 m delta^2) upward, exp(-m delta^2) downward.
pub fn okamoto_bound(kind: TailKind, m: f64, delta: f64) -> Result<f64> {
    if m < 1.0 || delta <= 0.0 {
        return domain("need m >= 1 and delta > 0");
    }
    match kind {
        TailKind::OkamotoUp => Ok((-2.0 * m * delta * delta).exp()),
        TailKind::OkamotoDown => Ok((-m * delta * delta).exp()),
        _ => domain("not an Okamoto tail"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeBounds {
    pub lower_threshold: f64,
    pub upper_threshold: f64,
    pub failure_lower: f64,
    pub failure_upper: f64,
}

impl DegreeBounds {
    pub fn contains(&self, min_degree: usize, max_degree: usize) -> bool {
        min_degree as f64 >= self.lower_threshold && max_degree as f64 <= self.upper_threshold
    }
}

/// (1 - delta)(n - 1) m_lo <= deg <= (1 + delta)(n - 1) m_hi, each side failing
/// with probability at most n exp(-delta^2 (n - 1) m / 3).
pub fn degree_bounds(n: usize, delta: f64, m_lo: f64, m_hi: f64) -> Result<DegreeBounds> {
    if !(m_lo > 0.0 && m_lo <= m_hi && m_hi <= 1.0) {
        return domain("need 0 < m_lo <= m_hi <= 1");
    }
    if !(delta > 0.0 && delta <= 1.0) || n < 2 {
        return domain("need delta in (0, 1] and n >= 2");
    }
    let trials = (n - 1) as f64;
    let tail = |m: f64| (n as f64 * (-delta * delta * trials * m / 3.0).exp()).min(1.0);
    Ok(DegreeBounds {
        lower_threshold: (1.0 - delta) * trials * m_lo,
        upper_threshold: (1.0 + delta) * trials * m_hi,
        failure_lower: tail(m_lo),
        failure_upper: tail(m_lo),
    })
}

/// Ahlfors-based degree window: m in [c_l eps^k, c_u (eps / (1 - lambda1))^k].
pub fn ahlfors_degree_bounds(model: &ManifoldModel, n: usize, epsilon: f64, delta: f64, lambda1: f64) -> Result<DegreeBounds> {
    let k = model.k as i32;
    let lo = model.c_lower * epsilon.powi(k);
    let hi = (model.c_upper * (epsilon / (1.0 - lambda1)).powi(k)).min(1.0);
    degree_bounds(n, delta, lo.min(hi), hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterKind {
    /// A deterministic center; counts over all n points.
    Fixed,
    /// A sample point; counts the other n - 1 points.
    Vertex,
    /// A closed hop ball of radius r around a sample point.
    SpBall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCountBounds {
    pub lo: f64,
    pub hi: f64,
    pub failure_prob: f64,
}

/// Window for the fraction of points in a ball of radius r.
///
/// For `Fixed` the statistic is n_B / n; for `Vertex` it is (n_B - 1)/(n - 1)
/// with the center excluded. `SpBall` takes r as a hop radius and needs
/// lambda1, lambda2 and epsilon.
#[allow(clippy::too_many_arguments)]
pub fn ball_count_bounds(
    model: &ManifoldModel,
    r: f64,
    n: usize,
    delta: f64,
    center_kind: CenterKind,
    epsilon: f64,
    lambda1: f64,
    lambda2: f64,
) -> Result<BallCountBounds> {
    if !(delta > 0.0 && delta < 1.0) || n < 2 {
        return domain("need delta in (0, 1) and n >= 2");
    }
    let k = model.k as i32;
    let (cl, cu) = (model.c_lower, model.c_upper);
    let nf = n as f64;
    match center_kind {
        CenterKind::Fixed | CenterKind::Vertex => {
            if !(r > 0.0 && r <= model.diameter) {
                return domain(format!("radius {r} outside (0, diameter]"));
            }
            let trials = if center_kind == CenterKind::Fixed { nf } else { nf - 1.0 };
            Ok(BallCountBounds {
                lo: (1.0 - delta) * cl * r.powi(k),
                hi: (1.0 + delta) * cu * r.powi(k),
                failure_prob: (2.0 * (-delta * delta * trials * cl * r.powi(k) / 3.0).exp()).min(1.0),
            })
        }
        CenterKind::SpBall => {
            if r < 2.0 {
                return domain(format!("hop radius {r} below 2"));
            }
            let inner = epsilon / (8.0 * (1.0 + lambda2)) * r;
            Ok(BallCountBounds {
                lo: (1.0 - delta) * cl * inner.powi(k),
                hi: (1.0 + delta) * cu * (epsilon / (1.0 - lambda1) * r).powi(k),
                failure_prob: (2.0 * (-delta * delta * (nf - 1.0) * cl * inner.powi(k) / 3.0).exp()).min(1.0),
            })
        }
    }
}

/// 2 sqrt(ln(c n^2 / p2) / n) for c = 4 (stated form) or c = 3 (proof form).
pub fn sqrt_deviation_bound(n: usize, p2: f64, c: f64) -> f64 {
    let nf = n as f64;
    2.0 * ((c * nf * nf / p2).ln() / nf).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterDeviation {
    pub center: usize,
    pub sup: f64,
    pub argmax_r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationStatistic {
    pub sup_value: f64,
    pub per_center_sup: Vec<CenterDeviation>,
    /// Bound with 4 n^2 (asserted).
    pub bound: f64,
    /// Bound with 3 n^2 (reported only).
    pub bound_3n2: f64,
    pub p2: f64,
    pub within_bound: bool,
    pub within_bound_3n2: bool,
    /// Balls checked for eta <= 1.5 mu + 3 delta^2 and the converse.
    pub corollary_balls: usize,
    pub corollary_holds: bool,
}

impl DeviationStatistic {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "center_index,sup_T,argmax_r,bound")?;
        for c in &self.per_center_sup {
            writeln!(w, "{},{:.16e},{:.16e},{:.16e}", c.center, c.sup, c.argmax_r, self.bound)?;
        }
        Ok(())
    }
}

/// Sorted geodesic distances from point `center` to all points (itself included).
pub fn sorted_distances(points: &PointCloud, model: &ManifoldModel, center: usize) -> Vec<f64> {
    let c = points.point(center);
    let mut d: Vec<f64> = points.iter().map(|p| model.geodesic_distance_unchecked(c, p)).collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Supremum over r > 0 of |sqrt(eta(B(c, r))) - sqrt(mu(B(c, r)))| for one
/// center, from its sorted distance list.
///
/// Open-ball counts are constant on (d_j, d_{j+1}] and mu is continuous and
/// nondecreasing, so the supremum of |T_r| is attained at a breakpoint by
/// the open statistic, or approached from the right of one by the closed
/// statistic T-bar (where it can only be positive).
pub fn center_supremum(sorted: &[f64], model: &ManifoldModel) -> Result<(f64, f64)> {
    let n = sorted.len() as f64;
    let mut best = (0.0f64, 0.0f64);
    let mut j = 0;
    while j < sorted.len() {
        let v = sorted[j];
        let mut end = j;
        while end < sorted.len() && sorted[end] == v {
            end += 1;
        }
        let sqrt_mu = model.ball_measure_radius(v)?.min(1.0).sqrt();
        if v > 0.0 {
            let open = ((j as f64) / n).sqrt() - sqrt_mu;
            if open.abs() > best.0 {
                best = (open.abs(), v);
            }
        }
        let closed = ((end as f64) / n).sqrt() - sqrt_mu;
        if closed > best.0 {
            best = (closed, v);
        }
        j = end;
    }
    Ok(best)
}

/// Breakpoint supremum over all centers; also checks the two-sided
/// consequence eta <= 1.5 mu + 3 delta^2, mu <= 1.5 eta + 3 delta^2 with
/// delta^2 = 4 ln(4 n^2 / p2) / n on every breakpoint ball.
pub fn uniform_sqrt_deviation(points: &PointCloud, model: &ManifoldModel, p2: f64) -> Result<DeviationStatistic> {
    let n = points.len();
    if n < 4 {
        return domain("need at least 4 points");
    }
    if !(p2 > 0.0 && p2 < 1.0) {
        return domain("p2 must lie in (0, 1)");
    }
    for p in points.iter() {
        model.check_point(p)?;
    }
    let nf = n as f64;
    let delta2 = 4.0 * (4.0 * nf * nf / p2).ln() / nf;
    let mut per_center = Vec::with_capacity(n);
    let mut corollary_balls = 0;
    let mut corollary_holds = true;
    for c in 0..n {
        let d = sorted_distances(points, model, c);
        let (sup, argmax_r) = center_supremum(&d, model)?;
        per_center.push(CenterDeviation { center: c, sup, argmax_r });
        let mut j = 0;
        while j < n {
            let v = d[j];
            let mut end = j;
            while end < n && d[end] == v {
                end += 1;
            }
            let mu = model.ball_measure_radius(v)?.min(1.0);
            for count in [j, end] {
                if count == j && v == 0.0 {
                    continue;
                }
                let eta = count as f64 / nf;
                corollary_balls += 1;
                if eta > 1.5 * mu + 3.0 * delta2 || mu > 1.5 * eta + 3.0 * delta2 {
                    corollary_holds = false;
                }
            }
            j = end;
        }
    }
    let sup_value = per_center.iter().map(|c| c.sup).fold(0.0, f64::max);
    let bound = sqrt_deviation_bound(n, p2, 4.0);
    let bound_3n2 = sqrt_deviation_bound(n, p2, 3.0);
    Ok(DeviationStatistic {
        sup_value,
        per_center_sup: per_center,
        bound,
        bound_3n2,
        p2,
        within_bound: sup_value <= bound,
        within_bound_3n2: sup_value <= bound_3n2,
        corollary_balls,
        corollary_holds,
    })
}
