//! Poincaré constants: the path-congestion bound, the closed-form constants
//! of the local Poincaré inequality, and the exact optimal constant of a
//! ball from a generalized eigenproblem.

use std::collections::HashSet;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::distance::Verdict;
use crate::error::{domain, Error, Result};
use crate::geograph::{Graph, MeasureKind, Openness};
use crate::manifold::ManifoldModel;
use crate::params::AssumptionParams;

/// Default limit on the enlarged ball size for the dense eigensolve.
pub const DEFAULT_ENLARGED_CAP: usize = 1000;

/// 0.5 (sum_B eta)^-1 l_max max_B eta^2 b_max.
pub fn kappa_general(weights_on_ball: &[f64], l_max: f64, b_max: f64) -> Result<f64> {
    let total: f64 = weights_on_ball.iter().sum();
    if weights_on_ball.is_empty() || total <= 0.0 {
        return domain("kappa needs a ball of positive mass");
    }
    let top = weights_on_ball.iter().copied().fold(0.0, f64::max);
    Ok(0.5 / total * l_max * top * top * b_max)
}

/// w = f (1+delta)/(1-delta) (c_u/c_l) (L*_max/L*_min)^k 4^k sqrt(k+3)^k with
/// f = 2 (`doubled`) or f = 1.
pub fn w_factor(delta: f64, c_upper: f64, c_lower: f64, lmin_star: f64, lmax_star: f64, k: usize, doubled: bool) -> f64 {
    let f = if doubled { 2.0 } else { 1.0 };
    let k = k as i32;
    f * (1.0 + delta) / (1.0 - delta)
        * (c_upper / c_lower)
        * (lmax_star / lmin_star).powi(k)
        * 4f64.powi(k)
        * ((k + 3) as f64).sqrt().powi(k)
}

/// (1 + w)^2 k^2 (2 sqrt(k+3) / L*_min)^(k+2), shared by every constant.
fn path_factor(w: f64, k: usize, lmin_star: f64) -> f64 {
    let kf = k as f64;
    (1.0 + w).powi(2) * kf * kf * (2.0 * ((k + 3) as f64).sqrt() / lmin_star).powi(k as i32 + 2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CKappa {
    pub value: f64,
    pub w: f64,
    pub n_threshold: f64,
    pub preconditions_ok: bool,
}

/// C_kappa = (n eps^(k+2))^-1 (eta+)^2 / ((1-delta) c_l eta-) (1+w)^2 k^2
/// (2 sqrt(k+3)/L*_min)^(k+2).
#[allow(clippy::too_many_arguments)]
pub fn c_kappa_bound(
    n: usize,
    epsilon: f64,
    k: usize,
    lmin_star: f64,
    lmax_star: f64,
    c_lower: f64,
    c_upper: f64,
    delta: f64,
    eta_plus: f64,
    eta_minus: f64,
) -> Result<CKappa> {
    check_common(delta, lmin_star, lmax_star, c_lower, c_upper, epsilon)?;
    if !(eta_minus > 0.0 && eta_minus <= eta_plus) {
        return domain("need 0 < eta- <= eta+");
    }
    let w = w_factor(delta, c_upper, c_lower, lmin_star, lmax_star, k, true);
    let nf = n as f64;
    let value = 1.0 / (nf * epsilon.powi(k as i32 + 2)) * eta_plus * eta_plus / ((1.0 - delta) * c_lower * eta_minus)
        * path_factor(w, k, lmin_star);
    let n_threshold = sample_threshold(k, lmin_star, lmax_star, c_lower, delta, epsilon);
    Ok(CKappa { value, w, n_threshold, preconditions_ok: nf >= n_threshold })
}

/// (1/((1-delta) c_l)) (4 sqrt(k+3) L*_max / (L*_min eps))^k + 1.
fn sample_threshold(k: usize, lmin_star: f64, lmax_star: f64, c_lower: f64, delta: f64, epsilon: f64) -> f64 {
    let root = ((k + 3) as f64).sqrt();
    (4.0 * root * lmax_star / (lmin_star * epsilon)).powi(k as i32) / ((1.0 - delta) * c_lower) + 1.0
}

fn check_common(delta: f64, lmin_star: f64, lmax_star: f64, c_lower: f64, c_upper: f64, epsilon: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return domain("delta must lie in (0, 1)");
    }
    if !(lmin_star > 0.0 && lmin_star <= lmax_star) || !(c_lower > 0.0 && c_lower <= c_upper) {
        return domain("need 0 < L*_min <= L*_max and 0 < c_l <= c_u");
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return domain("epsilon must be positive");
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpiConstants {
    /// Enlargement factor 4 (1 + lambda2)/(1 - lambda1) + 1.
    pub lambda: f64,
    /// Degree-measure constant.
    pub c_hat: f64,
    /// General-measure constant for the supplied eta+ and eta-.
    pub c_star: f64,
    /// Empirical-measure constant with w as printed for that measure.
    pub c_hat_empirical: f64,
    /// Same with the doubled w used by the other statements.
    pub c_hat_empirical_doubled_w: f64,
    pub c_kappa: f64,
    pub w: f64,
    pub w_single: f64,
    pub p4: f64,
    pub r_plus: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub n_threshold: f64,
    pub preconditions_ok: bool,
}

/// All constants of the local Poincaré inequality for the given sample size
/// and graph measure extremes.
pub fn lpi_constants(
    params: &AssumptionParams,
    model: &ManifoldModel,
    n: usize,
    epsilon: f64,
    eta_plus: f64,
    eta_minus: f64,
) -> Result<LpiConstants> {
    params.validate()?;
    let (l1, l2, delta) = (params.lambda1, params.lambda2, params.delta);
    let (cl, cu, k) = (model.c_lower, model.c_upper, model.k);
    let (lmin, lmax) = (params.lmin_star, params.lmax_star);
    let ck = c_kappa_bound(n, epsilon, k, lmin, lmax, cl, cu, delta, eta_plus, eta_minus)?;
    let w = ck.w;
    let w_single = w_factor(delta, cu, cl, lmin, lmax, k, false);
    let nf = n as f64;
    let kf = k as i32;
    let eps_k = epsilon.powi(kf);
    let c_hat = (1.0 - l1).powi(-(2 + 2 * kf)) * (1.0 + delta).powi(2) * cu * cu / ((1.0 - delta).powi(2) * cl * cl)
        * path_factor(w, k, lmin);
    let c_star = 1.0 / (eps_k * nf) / (1.0 - l1).powi(2) * eta_plus * eta_plus / ((1.0 - delta) * cl * eta_minus)
        * path_factor(w, k, lmin);
    let empirical = |w: f64| 1.0 / (eps_k * nf) / (1.0 - l1).powi(2) / ((1.0 - delta) * cl) * path_factor(w, k, lmin);
    let root = ((k + 3) as f64).sqrt();
    let p4 = 2.0 * (2.0 * root * nf * (1.0 - l1) / lmin).powi(kf)
        * (-delta * delta * nf * cl / 6.0 * eps_k * lmin.powi(kf) / (4f64.powi(kf) * root.powi(kf) * lmax.powi(kf))).exp()
        + 2.0 * (-delta * delta * nf * cl * eps_k / (6.0 * (1.0 - l1).powi(kf))).exp();
    let r_plus = ((1.0 - l1) * model.r_bullet / epsilon).min(nf);
    Ok(LpiConstants {
        lambda: 4.0 * (1.0 + l2) / (1.0 - l1) + 1.0,
        c_hat,
        c_star,
        c_hat_empirical: empirical(w_single),
        c_hat_empirical_doubled_w: empirical(w),
        c_kappa: ck.value,
        w,
        w_single,
        p4,
        r_plus,
        eta_plus,
        eta_minus,
        n_threshold: ck.n_threshold,
        preconditions_ok: ck.preconditions_ok && (1.0 - l1) * model.r_bullet / epsilon >= 1.0,
    })
}

/// sum_{x in set} w(x) (f(x) - mean_w)^2 with the w-weighted mean over `set`.
pub fn weighted_variance(weights: &[f64], set: &[usize], f: &[f64]) -> f64 {
    let total: f64 = set.iter().map(|&x| weights[x]).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mean = set.iter().map(|&x| weights[x] * f[x]).sum::<f64>() / total;
    set.iter().map(|&x| weights[x] * (f[x] - mean).powi(2)).sum()
}

/// sum over ordered pairs x, y in `set` with x ~ y of (f(x) - f(y))^2.
pub fn dirichlet_energy(graph: &Graph, set: &[usize], f: &[f64]) -> f64 {
    let inside: HashSet<usize> = set.iter().copied().collect();
    set.iter()
        .map(|&x| {
            graph
                .neighbors(x)
                .iter()
                .map(|&y| y as usize)
                .filter(|y| inside.contains(y))
                .map(|y| (f[x] - f[y]).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Variance over B1 is at most the variance over B2 for nested B1 in B2.
pub fn variance_monotonicity(weights: &[f64], b1: &[usize], b2: &[usize], f: &[f64]) -> Result<bool> {
    let outer: HashSet<usize> = b2.iter().copied().collect();
    if b1.iter().any(|x| !outer.contains(x)) {
        return domain("first set is not contained in the second");
    }
    let (v1, v2) = (weighted_variance(weights, b1, f), weighted_variance(weights, b2, f));
    Ok(v1 <= v2 + 1e-12 * v2.abs().max(1e-300))
}

/// sup over non-constant f of weighted_variance(B) / dirichlet_energy(B'),
/// for B within B' and B' inducing a connected subgraph.
///
/// Vertices of B' outside B only enter the energy, so they are eliminated by
/// harmonic extension (Schur complement of the Laplacian). Both forms vanish
/// on constants, so one vertex of B is grounded and the remaining pencil is
/// reduced with a Cholesky factor to a symmetric eigenproblem.
pub fn ball_poincare_ratio(graph: &Graph, weights: &[f64], ball: &[usize], enlarged: &[usize]) -> Result<f64> {
    let b = ball.len();
    if b == 0 {
        return domain("empty ball");
    }
    let in_ball: HashSet<usize> = ball.iter().copied().collect();
    if in_ball.len() != b {
        return domain("repeated vertex in ball");
    }
    let outside: Vec<usize> = enlarged.iter().copied().filter(|v| !in_ball.contains(v)).collect();
    if outside.len() + b != enlarged.len() {
        return domain("ball is not contained in the enlarged ball");
    }
    let order: Vec<usize> = ball.iter().chain(&outside).copied().collect();
    let sub = graph.induced(&order);
    let comps = sub.component_count();
    if comps > 1 {
        return Err(Error::Disconnected { components: comps });
    }
    if b == 1 {
        return Ok(0.0);
    }
    let m = order.len();
    let lap = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            sub.degree(i) as f64
        } else if sub.has_edge(i, j) {
            -1.0
        } else {
            0.0
        }
    });
    let mut schur = lap.view((0, 0), (b, b)).into_owned();
    if m > b {
        let l_oo = lap.view((b, b), (m - b, m - b)).into_owned();
        let l_ob = lap.view((b, 0), (m - b, b)).into_owned();
        let chol = l_oo.cholesky().ok_or_else(|| Error::Internal("outer Laplacian block not definite".into()))?;
        let x = chol.solve(&l_ob);
        schur -= l_ob.transpose() * x;
    }
    let w: Vec<f64> = ball.iter().map(|&v| weights[v]).collect();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return domain("ball has zero mass");
    }
    let g = b - 1;
    let centering = DMatrix::from_fn(g, g, |i, j| if i == j { w[i] } else { 0.0 } - w[i] * w[j] / total);
    let grounded = schur.view((0, 0), (g, g)).into_owned();
    let top = top_generalized_eigenvalue(&centering, grounded)?;
    // the energy counts each edge in both directions
    Ok(0.5 * top)
}

/// Largest eigenvalue of the pencil (a, e) with e symmetric positive definite.
pub fn top_generalized_eigenvalue(a: &DMatrix<f64>, e: DMatrix<f64>) -> Result<f64> {
    let chol = e.cholesky().ok_or_else(|| Error::Internal("energy form not definite".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    let mut m = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    let mt = m.transpose();
    m += mt;
    m *= 0.5;
    Ok(m.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallLpiResult {
    pub center: usize,
    pub r: f64,
    pub ball_size: usize,
    pub enlarged_size: usize,
    pub c_emp: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

/// Optimal constant for B = closed hop ball(center, r) and B' = closed hop
/// ball(center, lambda r), divided by r^2. Fails with `TooLarge` above `cap`.
pub fn optimal_poincare_constant(
    graph: &Graph,
    weights: &[f64],
    center: usize,
    r: f64,
    lambda: f64,
    cap: usize,
) -> Result<(usize, usize, f64)> {
    if r.is_nan() || r <= 0.0 || lambda < 1.0 {
        return domain("need r > 0 and lambda >= 1");
    }
    let ball = graph.ball_sp(center, r, Openness::Closed)?;
    let enlarged = graph.ball_sp(center, lambda * r, Openness::Closed)?;
    if enlarged.len() > cap {
        return Err(Error::TooLarge(enlarged.len(), cap));
    }
    let ratio = ball_poincare_ratio(graph, weights, &ball, &enlarged).map_err(|e| match e {
        Error::Disconnected { .. } => Error::Internal("hop ball induces a disconnected subgraph".into()),
        other => other,
    })?;
    Ok((ball.len(), enlarged.len(), ratio / (r * r)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedBall {
    pub center: usize,
    pub r: f64,
    pub enlarged_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpiReport {
    pub measure_kind: MeasureKind,
    pub lambda: f64,
    pub bound: f64,
    pub results: Vec<BallLpiResult>,
    pub skipped: Vec<SkippedBall>,
    pub failures: usize,
    pub max_c_emp: f64,
}

impl LpiReport {
    pub fn pass_fraction(&self) -> f64 {
        if self.results.is_empty() {
            1.0
        } else {
            1.0 - self.failures as f64 / self.results.len() as f64
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "center,r,ball_size,enlarged_size,c_emp,bound,verdict")?;
        for b in &self.results {
            writeln!(
                w,
                "{},{},{},{},{:.16e},{:.16e},{}",
                b.center,
                b.r,
                b.ball_size,
                b.enlarged_size,
                b.c_emp,
                b.bound,
                if b.verdict.passed() { "pass" } else { "fail" }
            )?;
        }
        Ok(())
    }
}

/// Optimal constants over all (center, r) against the closed-form constant.
///
/// Degree measure: weights deg(x) against C-hat (both sides scaled by
/// vol(V)). Empirical measure: weights 1 against the empirical-measure
/// constant (both sides scaled by n).
pub fn certify_lpi(
    graph: &Graph,
    measure_kind: MeasureKind,
    constants: &LpiConstants,
    centers: &[usize],
    radii: &[f64],
    cap: usize,
) -> Result<LpiReport> {
    graph.require_connected()?;
    if let Some(r) = radii.iter().find(|&&r| !(r >= 1.0 && r < constants.r_plus)) {
        return domain(format!("radius {r} outside [1, r_plus = {})", constants.r_plus));
    }
    let (weights, bound) = match measure_kind {
        MeasureKind::DegreeVolume => (graph.degrees().iter().map(|&d| d as f64).collect::<Vec<_>>(), constants.c_hat),
        MeasureKind::Empirical => (vec![1.0; graph.n()], constants.c_hat_empirical),
    };
    let mut report = LpiReport {
        measure_kind,
        lambda: constants.lambda,
        bound,
        results: Vec::new(),
        skipped: Vec::new(),
        failures: 0,
        max_c_emp: 0.0,
    };
    for &c in centers {
        for &r in radii {
            match optimal_poincare_constant(graph, &weights, c, r, constants.lambda, cap) {
                Ok((ball_size, enlarged_size, c_emp)) => {
                    let verdict = Verdict::from_pass(c_emp <= bound);
                    if !verdict.passed() {
                        report.failures += 1;
                    }
                    report.max_c_emp = report.max_c_emp.max(c_emp);
                    report.results.push(BallLpiResult { center: c, r, ball_size, enlarged_size, c_emp, bound, verdict });
                }
                Err(Error::TooLarge(size, _)) => report.skipped.push(SkippedBall { center: c, r, enlarged_size: size }),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(report)
}
