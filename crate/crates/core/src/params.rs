use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Lipschitz constants of the radial ball-to-cube map `u -> u |u|_2 / |u|_inf`
/// on the closed unit ball, estimated by a dense pair scan (k = 2); the map is
/// the identity for k = 1.
pub const G1_LIPSCHITZ_MIN_K2: f64 = 0.866;
pub const G1_LIPSCHITZ_MAX_K2: f64 = 2.29;

/// Distortion factors of the inverse exponential map on a ball of radius
/// below r_bullet: (1 + pi^2/8)^-1 and (1 - pi^2/24)^-1, rounded outward.
pub const G3_LIPSCHITZ_MIN: f64 = 0.4;
pub const G3_LIPSCHITZ_MAX: f64 = 1.7;

/// The affine map [-1, 1]^k -> [0, 1]^k.
pub const G0_LIPSCHITZ: f64 = 0.5;

pub fn g1_lipschitz(k: usize) -> (f64, f64) {
    if k == 1 {
        (1.0, 1.0)
    } else {
        (G1_LIPSCHITZ_MIN_K2, G1_LIPSCHITZ_MAX_K2)
    }
}

/// Default (L*_min, L*_max) for the chart composition in dimension k.
pub fn default_chart_lipschitz(k: usize) -> (f64, f64) {
    let (g1_min, g1_max) = g1_lipschitz(k);
    (
        G0_LIPSCHITZ * g1_min * G3_LIPSCHITZ_MIN,
        G0_LIPSCHITZ * g1_max * G3_LIPSCHITZ_MAX,
    )
}

/// Every tunable symbol of the sampling and graph assumptions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub delta: f64,
    pub p1: f64,
    pub p2: f64,
    pub lmin_star: f64,
    pub lmax_star: f64,
}

impl AssumptionParams {
    /// The reference setting used throughout the tests: lambda = 1/3, delta = 1/2.
    pub fn reference(k: usize) -> Self {
        let (lmin_star, lmax_star) = default_chart_lipschitz(k);
        Self {
            lambda1: 1.0 / 3.0,
            lambda2: 1.0 / 3.0,
            delta: 0.5,
            p1: 0.1,
            p2: 0.1,
            lmin_star,
            lmax_star,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.lambda1) || !open_unit(self.lambda2) {
            return domain("lambda1 and lambda2 must lie in (0, 1)");
        }
        if !open_unit(self.delta) {
            return domain("delta must lie in (0, 1)");
        }
        if !open_unit(self.p1) || !(self.p2 > 0.0 && self.p2 <= 0.5) {
            return domain("p1 must lie in (0, 1) and p2 in (0, 0.5]");
        }
        if !(self.lmin_star > 0.0 && self.lmin_star <= self.lmax_star && self.lmax_star.is_finite()) {
            return domain("need 0 < L*_min <= L*_max < inf");
        }
        Ok(())
    }
}
