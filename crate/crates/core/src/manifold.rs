//! Catalog of closed manifolds with uniform measure: circle, 2-sphere and
//! flat torus (embedded in R^4 as a product of two circles).

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng;

/// Points stored row-major in one flat buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return domain("coordinate buffer does not match the dimension");
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return domain("rows of unequal length");
        }
        Self::new(dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Reorders points so that new point `i` is old point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let coords = perm.iter().flat_map(|&i| self.point(i).iter().copied()).collect();
        Self { dim: self.dim, coords }
    }

    pub fn subset(&self, ids: &[usize]) -> Self {
        self.permuted(ids)
    }

    /// One row per point, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldKind {
    Circle { radius: f64 },
    Sphere2 { radius: f64 },
    FlatTorus { l1: f64, l2: f64 },
}

/// Result of scanning mu(B(r)) / r^k and mu(B(2r)) / mu(B(r)) over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantCheck {
    pub grid_points: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub max_doubling_ratio: f64,
    /// Our own derivations: no concrete values are given in the literature.
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldModel {
    pub kind: ManifoldKind,
    pub k: usize,
    pub ambient_dim: usize,
    pub curvature_bound: f64,
    pub injectivity_radius: f64,
    pub r_bullet: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub doubling_v: f64,
    pub s0: f64,
    pub r0: f64,
    pub diameter: f64,
    pub check: ConstantCheck,
}

const ON_MANIFOLD_TOL: f64 = 1e-9;
const CONSTANT_GRID: usize = 20_000;

impl ManifoldModel {
    pub fn circle(radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        let c = 1.0 / (PI * radius);
        Self::finish(ManifoldModel {
            kind: ManifoldKind::Circle { radius },
            k: 1,
            ambient_dim: 2,
            curvature_bound: 0.0,
            injectivity_radius: PI * radius,
            r_bullet: PI * radius / 2.0,
            c_lower: c,
            c_upper: c,
            doubling_v: 1.0,
            s0: 2.0 * radius,
            r0: radius,
            diameter: PI * radius,
            check: ConstantCheck::empty(),
        })
    }

    pub fn sphere2(radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        let r2 = radius * radius;
        Self::finish(ManifoldModel {
            kind: ManifoldKind::Sphere2 { radius },
            k: 2,
            ambient_dim: 3,
            curvature_bound: 1.0 / r2,
            injectivity_radius: PI * radius,
            // min(i/2, pi / (2 sqrt(Lambda))), both equal to pi R / 2
            r_bullet: PI * radius / 2.0,
            // (1 - cos s) / (2 s^2 R^2) decreases from 1/(4R^2) to 1/(pi^2 R^2)
            c_lower: 1.0 / (PI * PI * r2),
            c_upper: 1.0 / (4.0 * r2),
            // mu(2r)/mu(r) = 2(1 + cos(r/R)) <= 4 below the antipodal cut
            doubling_v: 2.0,
            s0: 2.0 * radius,
            r0: radius,
            diameter: PI * radius,
            check: ConstantCheck::empty(),
        })
    }

    pub fn flat_torus(l1: f64, l2: f64) -> Result<Self> {
        positive("l1", l1)?;
        positive("l2", l2)?;
        let lmin = l1.min(l2);
        let diameter = (0.25 * l1 * l1 + 0.25 * l2 * l2).sqrt();
        let r0 = lmin / (2.0 * PI);
        let mut model = ManifoldModel {
            kind: ManifoldKind::FlatTorus { l1, l2 },
            k: 2,
            ambient_dim: 4,
            curvature_bound: 0.0,
            injectivity_radius: lmin / 2.0,
            r_bullet: lmin / 4.0,
            c_lower: 1.0 / (diameter * diameter),
            c_upper: PI / (l1 * l2),
            doubling_v: 2.0,
            s0: 0.0,
            r0,
            diameter,
            check: ConstantCheck::empty(),
        };
        model.s0 = model.torus_branch_separation(l1, l2);
        Self::finish(model)
    }

    /// `kind` is one of circle, sphere2, flat_torus; params are the lengths.
    pub fn from_spec(kind: &str, params: &[f64]) -> Result<Self> {
        match (kind, params) {
            ("circle", [r]) => Self::circle(*r),
            ("sphere2" | "sphere", [r]) => Self::sphere2(*r),
            ("flat_torus" | "torus", [a, b]) => Self::flat_torus(*a, *b),
            _ => domain(format!("unknown manifold {kind} with {} parameters", params.len())),
        }
    }

    fn finish(mut self) -> Result<Self> {
        self.check = self.verify_constants()?;
        Ok(self)
    }

    /// Minimal chord length between points at intrinsic distance pi r0.
    /// Any farther pair dominates some boundary pair coordinate-wise, so the
    /// boundary minimum is the separation.
    fn torus_branch_separation(&self, l1: f64, l2: f64) -> f64 {
        let (rho1, rho2) = (l1 / (2.0 * PI), l2 / (2.0 * PI));
        let reach = PI * self.r0;
        let chord = |d: f64, rho: f64| 2.0 * rho * (d / (2.0 * rho)).sin();
        (0..=100_000)
            .map(|i| {
                let t = 0.5 * PI * i as f64 / 100_000.0;
                let (a, b) = (reach * t.cos(), reach * t.sin());
                chord(a, rho1).hypot(chord(b, rho2))
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn verify_constants(&self) -> Result<ConstantCheck> {
        let k = self.k as i32;
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio: f64 = 0.0;
        let mut max_doubling: f64 = 0.0;
        for i in 1..=CONSTANT_GRID {
            // denser near zero, where the small-ball behaviour lives
            let s = i as f64 / CONSTANT_GRID as f64;
            let r = self.diameter * s * s.sqrt();
            let m = self.ball_measure_radius(r)?;
            let ratio = m / r.powi(k);
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            max_doubling = max_doubling.max(self.ball_measure_radius(2.0 * r)? / m);
        }
        let slack = 1e-12;
        if self.c_lower > min_ratio * (1.0 + slack) {
            return Err(Error::Constant {
                name: "c_l",
                detail: format!("declared {} above grid minimum {min_ratio}", self.c_lower),
            });
        }
        if self.c_upper < max_ratio * (1.0 - slack) {
            return Err(Error::Constant {
                name: "c_u",
                detail: format!("declared {} below grid maximum {max_ratio}", self.c_upper),
            });
        }
        if max_doubling > 2f64.powf(self.doubling_v) * (1.0 + slack) {
            return Err(Error::Constant {
                name: "v",
                detail: format!("doubling ratio {max_doubling} exceeds 2^{}", self.doubling_v),
            });
        }
        if (self.ball_measure_radius(self.diameter)? - 1.0).abs() > 1e-12 {
            return Err(Error::Constant { name: "diameter", detail: "ball of diameter radius is not everything".into() });
        }
        Ok(ConstantCheck {
            grid_points: CONSTANT_GRID,
            min_ratio,
            max_ratio,
            max_doubling_ratio: max_doubling,
            source: "derived".into(),
        })
    }

    pub fn sample(&self, n: usize, seed: u64) -> PointCloud {
        let mut rng = rng::stream(seed, rng::SAMPLE);
        let mut coords = Vec::with_capacity(n * self.ambient_dim);
        for _ in 0..n {
            match self.kind {
                ManifoldKind::Circle { radius } => {
                    let t: f64 = rng.random::<f64>() * 2.0 * PI;
                    coords.extend([radius * t.cos(), radius * t.sin()]);
                }
                ManifoldKind::Sphere2 { radius } => loop {
                    let g: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
                    let len = norm(&g);
                    if len > 1e-6 {
                        coords.extend(g.iter().map(|x| radius * x / len));
                        break;
                    }
                },
                ManifoldKind::FlatTorus { l1, l2 } => {
                    let u = rng.random::<f64>() * l1;
                    let v = rng.random::<f64>() * l2;
                    coords.extend(self.torus_point(u, v));
                }
            }
        }
        PointCloud { dim: self.ambient_dim, coords }
    }

    /// Circle point at angle theta.
    pub fn circle_point(&self, theta: f64) -> Vec<f64> {
        let r = match self.kind {
            ManifoldKind::Circle { radius } => radius,
            _ => panic!("circle_point on a non-circle model"),
        };
        vec![r * theta.cos(), r * theta.sin()]
    }

    /// Torus point with intrinsic coordinates (u, v) in [0, L1) x [0, L2).
    pub fn torus_point(&self, u: f64, v: f64) -> Vec<f64> {
        let (l1, l2) = match self.kind {
            ManifoldKind::FlatTorus { l1, l2 } => (l1, l2),
            _ => panic!("torus_point on a non-torus model"),
        };
        let (rho1, rho2) = (l1 / (2.0 * PI), l2 / (2.0 * PI));
        vec![
            rho1 * (u / rho1).cos(),
            rho1 * (u / rho1).sin(),
            rho2 * (v / rho2).cos(),
            rho2 * (v / rho2).sin(),
        ]
    }

    /// Intrinsic coordinates of a torus point, in [0, L1) x [0, L2).
    pub fn torus_coords(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (l1, l2) = match self.kind {
            ManifoldKind::FlatTorus { l1, l2 } => (l1, l2),
            _ => return domain("torus_coords on a non-torus model"),
        };
        self.check_point(x)?;
        let wrap = |a: f64, l: f64| {
            let t = a.rem_euclid(2.0 * PI) / (2.0 * PI) * l;
            if t >= l { 0.0 } else { t }
        };
        Ok((wrap(x[1].atan2(x[0]), l1), wrap(x[3].atan2(x[2]), l2)))
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.ambient_dim {
            return domain(format!("expected {} coordinates, got {}", self.ambient_dim, x.len()));
        }
        let residual = match self.kind {
            ManifoldKind::Circle { radius } | ManifoldKind::Sphere2 { radius } => (norm(x) - radius).abs() / radius.max(1.0),
            ManifoldKind::FlatTorus { l1, l2 } => {
                let a = (x[0].hypot(x[1]) - l1 / (2.0 * PI)).abs();
                let b = (x[2].hypot(x[3]) - l2 / (2.0 * PI)).abs();
                a.max(b) / l1.max(l2).max(1.0)
            }
        };
        if residual.is_nan() || residual > ON_MANIFOLD_TOL {
            return Err(Error::OffManifold { residual });
        }
        Ok(())
    }

    pub fn geodesic_distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.geodesic_distance_unchecked(x, y))
    }

    /// Geodesic distance for points already known to be on the manifold.
    pub fn geodesic_distance_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Circle { radius } => radius * plane_angle(x[0], x[1], y[0], y[1]),
            ManifoldKind::Sphere2 { radius } => {
                let c = cross3(x, y);
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                radius * norm(&c).atan2(dot)
            }
            ManifoldKind::FlatTorus { l1, l2 } => {
                let du = l1 / (2.0 * PI) * plane_angle(x[0], x[1], y[0], y[1]);
                let dv = l2 / (2.0 * PI) * plane_angle(x[2], x[3], y[2], y[3]);
                du.hypot(dv)
            }
        }
    }

    /// mu(B_M(x, r)); the catalog is homogeneous so only the point check uses x.
    pub fn ball_measure(&self, x: &[f64], r: f64) -> Result<f64> {
        self.check_point(x)?;
        self.ball_measure_radius(r)
    }

    pub fn ball_measure_radius(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 0.0 {
            return domain(format!("negative radius {r}"));
        }
        Ok(match self.kind {
            ManifoldKind::Circle { radius } => (r / (PI * radius)).min(1.0),
            ManifoldKind::Sphere2 { radius } => {
                // (1 - cos a) / 2 without cancellation at small a
                let h = (0.5 * (r / radius).min(PI)).sin();
                h * h
            }
            ManifoldKind::FlatTorus { l1, l2 } => disc_rectangle_area(r, 0.5 * l1, 0.5 * l2) / (l1 * l2),
        })
    }

    /// mu of the ambient Euclidean ball {y in M : |x - y| <= r}.
    pub fn chord_ball_measure(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 0.0 {
            return domain(format!("negative radius {r}"));
        }
        match self.kind {
            ManifoldKind::Circle { radius } | ManifoldKind::Sphere2 { radius } => {
                let arc = 2.0 * radius * (r / (2.0 * radius)).min(1.0).asin();
                self.ball_measure_radius(arc)
            }
            ManifoldKind::FlatTorus { l1, l2 } => Ok(torus_chord_ball(r, l1, l2)),
        }
    }

    /// Log map at `center`, expressed in a fixed orthonormal tangent basis.
    pub fn exp_inverse(&self, center: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let d = self.geodesic_distance(center, y)?;
        if d >= self.injectivity_radius {
            return Err(Error::OutOfInjectivity { distance: d, limit: self.injectivity_radius });
        }
        Ok(match self.kind {
            ManifoldKind::Circle { radius } => {
                let a = (center[0] * y[1] - center[1] * y[0]).atan2(center[0] * y[0] + center[1] * y[1]);
                vec![radius * a]
            }
            ManifoldKind::Sphere2 { radius } => {
                let c: Vec<f64> = center.iter().map(|v| v / radius).collect();
                let yy: Vec<f64> = y.iter().map(|v| v / radius).collect();
                let (e1, e2) = tangent_basis(&c);
                let cos = dot3(&c, &yy);
                let w: Vec<f64> = (0..3).map(|i| yy[i] - cos * c[i]).collect();
                let (a, b) = (dot3(&w, &e1), dot3(&w, &e2));
                let s = a.hypot(b);
                if s == 0.0 {
                    vec![0.0, 0.0]
                } else {
                    vec![d * a / s, d * b / s]
                }
            }
            ManifoldKind::FlatTorus { l1, l2 } => {
                let (u0, v0) = self.torus_coords(center)?;
                let (u1, v1) = self.torus_coords(y)?;
                vec![wrap_signed(u1 - u0, l1), wrap_signed(v1 - v0, l2)]
            }
        })
    }

    /// Exponential map at `center` for a tangent vector in the basis used by
    /// `exp_inverse`.
    pub fn exp_map(&self, center: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_point(center)?;
        if v.len() != self.k {
            return domain("tangent vector has the wrong dimension");
        }
        Ok(match self.kind {
            ManifoldKind::Circle { radius } => {
                let a = center[1].atan2(center[0]) + v[0] / radius;
                vec![radius * a.cos(), radius * a.sin()]
            }
            ManifoldKind::Sphere2 { radius } => {
                let c: Vec<f64> = center.iter().map(|x| x / radius).collect();
                let (e1, e2) = tangent_basis(&c);
                let len = v[0].hypot(v[1]);
                if len == 0.0 {
                    return Ok(center.to_vec());
                }
                let th = len / radius;
                (0..3)
                    .map(|i| radius * (th.cos() * c[i] + th.sin() * (v[0] * e1[i] + v[1] * e2[i]) / len))
                    .collect()
            }
            ManifoldKind::FlatTorus { l1, l2 } => {
                let (u0, v0) = self.torus_coords(center)?;
                self.torus_point((u0 + v[0]).rem_euclid(l1), (v0 + v[1]).rem_euclid(l2))
            }
        })
    }

    /// Infimum over centers of mu(B(z, r)); the catalog is homogeneous.
    pub fn min_ball_measure(&self, r: f64) -> Result<f64> {
        self.ball_measure_radius(r)
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive and finite, got {x}"))
    }
}

impl ConstantCheck {
    fn empty() -> Self {
        Self { grid_points: 0, min_ratio: 0.0, max_ratio: 0.0, max_doubling_ratio: 0.0, source: String::new() }
    }
}

fn plane_angle(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    (x0 * y1 - x1 * y0).atan2(x0 * y0 + x1 * y1).abs()
}

fn wrap_signed(d: f64, l: f64) -> f64 {
    let t = (d + 0.5 * l).rem_euclid(l) - 0.5 * l;
    if t < -0.5 * l { t + l } else { t }
}

fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Orthonormal tangent frame at the unit vector c, chosen deterministically.
fn tangent_basis(c: &[f64]) -> ([f64; 3], [f64; 3]) {
    let axis = (0..3).min_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs())).unwrap_or(0);
    let mut a = [0.0; 3];
    a[axis] = 1.0;
    let p = dot3(&a, c);
    let mut e1 = [a[0] - p * c[0], a[1] - p * c[1], a[2] - p * c[2]];
    let len = norm(&e1);
    e1.iter_mut().for_each(|x| *x /= len);
    let e2 = cross3(c, &e1);
    (e1, e2)
}

/// Area of {|x| <= a, |y| <= b, x^2 + y^2 <= r^2}.
pub(crate) fn disc_rectangle_area(r: f64, a: f64, b: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let antiderivative = |x: f64| 0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).clamp(-1.0, 1.0).asin());
    let top = a.min(r);
    // below x_flat the chord height exceeds b and the rectangle caps it
    let x_flat = (r * r - b * b).max(0.0).sqrt().min(top);
    4.0 * (b * x_flat + antiderivative(top) - antiderivative(x_flat))
}

fn torus_chord_ball(r: f64, l1: f64, l2: f64) -> f64 {
    let (rho1, rho2) = (l1 / (2.0 * PI), l2 / (2.0 * PI));
    let half_width = |du: f64| {
        let c1 = 2.0 * rho1 * (du / (2.0 * rho1)).sin();
        if c1 > r {
            return 0.0;
        }
        let rest = (r * r - c1 * c1).sqrt();
        if rest >= 2.0 * rho2 {
            0.5 * l2
        } else {
            (2.0 * rho2 * (rest / (2.0 * rho2)).asin()).min(0.5 * l2)
        }
    };
    // integrate up to where the first chord alone reaches r
    let end = if r >= 2.0 * rho1 { 0.5 * l1 } else { (2.0 * rho1 * (r / (2.0 * rho1)).asin()).min(0.5 * l1) };
    let steps = 20_000;
    let h = end / steps as f64;
    let mut acc = 0.0;
    for i in 0..=steps {
        let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * half_width(i as f64 * h);
    }
    // symmetric in du and in the sign of dv
    (4.0 * acc * h / 3.0 / (l1 * l2)).min(1.0)
}
