//! Random-walk Laplacian, heat kernel and spectral graph wavelets.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distance::Verdict;
use crate::error::{domain, Error, Result};
use crate::geograph::{Graph, Openness, UNREACHABLE};

/// Largest graph the dense eigensolve accepts.
pub const SPECTRAL_MAX_N: usize = 2500;

/// Heat kernel entries below this fraction of Q_t(x, x) are dropped from the
/// envelope fit.
pub const ENVELOPE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Laplacians {
    /// I - D^-1 A
    pub random_walk: DMatrix<f64>,
    /// D^1/2 L D^-1/2 = I - D^-1/2 A D^-1/2
    pub symmetric: DMatrix<f64>,
    pub degrees: Vec<f64>,
}

fn degrees_checked(graph: &Graph) -> Result<Vec<f64>> {
    if let Some(v) = (0..graph.n()).find(|&v| graph.degree(v) == 0) {
        return Err(Error::IsolatedVertex(v));
    }
    Ok(graph.degrees().into_iter().map(|d| d as f64).collect())
}

pub fn laplacians(graph: &Graph) -> Result<Laplacians> {
    let n = graph.n();
    if n > SPECTRAL_MAX_N {
        return Err(Error::TooLarge(n, SPECTRAL_MAX_N));
    }
    let degrees = degrees_checked(graph)?;
    let mut random_walk = DMatrix::identity(n, n);
    let mut symmetric = DMatrix::identity(n, n);
    for (i, j) in graph.edges() {
        random_walk[(i, j)] = -1.0 / degrees[i];
        random_walk[(j, i)] = -1.0 / degrees[j];
        let s = -1.0 / (degrees[i] * degrees[j]).sqrt();
        symmetric[(i, j)] = s;
        symmetric[(j, i)] = s;
    }
    Ok(Laplacians { random_walk, symmetric, degrees })
}

/// Eigenpairs of the symmetric normalized Laplacian, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: DMatrix<f64>,
    pub degrees: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn of(graph: &Graph) -> Result<Self> {
        let lap = laplacians(graph)?;
        Ok(Self::from_laplacians(&lap))
    }

    pub fn from_laplacians(lap: &Laplacians) -> Self {
        let eig = lap.symmetric.clone().symmetric_eigen();
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Self { eigenvalues, eigenvectors, degrees: lap.degrees.clone() }
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Sum_j g(lambda_j) f_j f_j^T.
    pub fn apply_function(&self, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let scaled = self.scaled_columns(&g);
        &scaled * self.eigenvectors.transpose()
    }

    fn scaled_columns(&self, g: &impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let s = g(l);
            scaled.column_mut(j).scale_mut(s);
        }
        scaled
    }

    /// Rows `rows` of Sum_j g(lambda_j) f_j f_j^T.
    pub fn function_rows(&self, g: impl Fn(f64) -> f64, rows: &[usize]) -> Vec<Vec<f64>> {
        let gv: Vec<f64> = self.eigenvalues.iter().map(|&l| g(l)).collect();
        rows.iter()
            .map(|&x| {
                let coeff = DVector::from_fn(self.n(), |j, _| gv[j] * self.eigenvectors[(x, j)]);
                (&self.eigenvectors * coeff).iter().copied().collect()
            })
            .collect()
    }

    /// max |L' - Sum lambda_j f_j f_j^T|.
    pub fn reconstruction_error(&self, symmetric: &DMatrix<f64>) -> f64 {
        (self.apply_function(|l| l) - symmetric).amax()
    }
}

#[derive(Clone, Debug)]
pub struct HeatKernel {
    pub t: f64,
    /// exp(-t L), row stochastic.
    pub p: DMatrix<f64>,
    /// P_t D^-1, symmetric.
    pub q: DMatrix<f64>,
}

impl HeatKernel {
    pub fn max_row_sum_error(&self) -> f64 {
        self.p.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn symmetry_error(&self) -> f64 {
        (&self.q - self.q.transpose()).amax()
    }

    pub fn min_entry(&self) -> f64 {
        self.p.min().min(self.q.min())
    }
}

/// P_t = D^-1/2 exp(-t L') D^1/2 and Q_t = D^-1/2 exp(-t L') D^-1/2.
pub fn heat_kernel(spec: &SpectralDecomposition, t: f64) -> Result<HeatKernel> {
    if t.is_nan() || t < 0.0 {
        return domain("heat time must be nonnegative");
    }
    let e = spec.apply_function(|l| (-t * l).exp());
    let s: Vec<f64> = spec.degrees.iter().map(|d| d.sqrt()).collect();
    let n = spec.n();
    let p = DMatrix::from_fn(n, n, |i, j| e[(i, j)] * s[j] / s[i]);
    let q = DMatrix::from_fn(n, n, |i, j| e[(i, j)] / (s[i] * s[j]));
    Ok(HeatKernel { t, p, q })
}

/// Rows of Q_t without forming the full matrix.
pub fn heat_kernel_rows(spec: &SpectralDecomposition, t: f64, rows: &[usize]) -> Result<Vec<Vec<f64>>> {
    if t.is_nan() || t < 0.0 {
        return domain("heat time must be nonnegative");
    }
    let s: Vec<f64> = spec.degrees.iter().map(|d| d.sqrt()).collect();
    let raw = spec.function_rows(|l| (-t * l).exp(), rows);
    Ok(rows
        .iter()
        .zip(raw)
        .map(|(&x, row)| row.iter().enumerate().map(|(y, v)| v / (s[x] * s[y])).collect())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub x: usize,
    pub y: usize,
    pub d_sp: u32,
    pub t: f64,
    /// d_SP^2 / t
    pub xval: f64,
    /// ln(Q_t(x, y) vol(closed ball(x, ceil(sqrt t))))
    pub yval: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub t_grid: Vec<f64>,
    pub points: Vec<EnvelopePoint>,
    /// (x, y, t) pairs whose kernel value fell below the floor.
    pub dropped: Vec<(usize, usize, f64)>,
    pub distinct_d_sp: usize,
    pub degenerate: bool,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub c1_hat: Option<f64>,
    pub c2_hat: Option<f64>,
    pub max_positive_residual: Option<f64>,
    /// Whether every t lies in [r_min^1.1, r_max] when a window is given.
    pub in_window: Option<bool>,
    pub verdict: Verdict,
}

impl EnvelopeReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,d_sp,t_or_level,value")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{},{:.16e}", p.x, p.y, p.d_sp, p.t, p.yval)?;
        }
        Ok(())
    }
}

/// Least-squares line through (x, y); None when the x values coincide.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Fits ln(Q_t(x, y) vol(B(x, sqrt t))) against d_SP(x, y)^2 / t over all y
/// with d_SP(x, y) <= t, for each source x and each t.
pub fn subgaussian_envelope(
    graph: &Graph,
    spec: &SpectralDecomposition,
    t_grid: &[f64],
    sources: &[usize],
    window: Option<(f64, f64)>,
) -> Result<EnvelopeReport> {
    graph.require_connected()?;
    if t_grid.iter().any(|&t| t.is_nan() || t <= 0.0) {
        return domain("heat times must be positive");
    }
    let degrees = &spec.degrees;
    let dists: Vec<Vec<u32>> = sources.iter().map(|&x| graph.sp_distances_from(x)).collect();
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for &t in t_grid {
        let rows = heat_kernel_rows(spec, t, sources)?;
        let radius = crate::tolerant_ceil(t.sqrt());
        for ((&x, row), dist) in sources.iter().zip(&rows).zip(&dists) {
            let vol: f64 = ball_volume(dist, degrees, radius);
            let floor = ENVELOPE_FLOOR * row[x];
            for (y, &q) in row.iter().enumerate() {
                let d = dist[y];
                if d == UNREACHABLE || d as f64 > t {
                    continue;
                }
                if q <= floor {
                    dropped.push((x, y, t));
                    continue;
                }
                points.push(EnvelopePoint {
                    x,
                    y,
                    d_sp: d,
                    t,
                    xval: (d as f64).powi(2) / t,
                    yval: (q * vol).ln(),
                });
            }
        }
    }
    let mut distinct: Vec<u32> = points.iter().map(|p| p.d_sp).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let xs: Vec<f64> = points.iter().map(|p| p.xval).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.yval).collect();
    let fit = fit_line(&xs, &ys);
    let degenerate = distinct.len() < 3 || fit.is_none();
    let max_positive_residual =
        fit.map(|(a, b)| xs.iter().zip(&ys).map(|(x, y)| y - (a * x + b)).fold(0.0, f64::max));
    let in_window = window.map(|(rmin, rmax)| t_grid.iter().all(|&t| t >= rmin.powf(1.1) && t <= rmax));
    let ok = !degenerate && fit.is_some_and(|(a, _)| a < 0.0) && max_positive_residual.is_some_and(f64::is_finite);
    Ok(EnvelopeReport {
        t_grid: t_grid.to_vec(),
        points,
        dropped,
        distinct_d_sp: distinct.len(),
        degenerate,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        c1_hat: fit.map(|f| f.1.exp()),
        c2_hat: fit.map(|f| -f.0),
        max_positive_residual,
        in_window,
        verdict: Verdict::from_pass(ok),
    })
}

fn ball_volume(dist: &[u32], degrees: &[f64], radius: f64) -> f64 {
    let h = crate::geograph::max_hops(radius, Openness::Closed).unwrap_or(0);
    dist.iter().zip(degrees).filter(|(d, _)| **d <= h).map(|(_, g)| g).sum()
}

/// Band function generating the wavelet levels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandFunction {
    /// cos^2(pi/2 log2 x) on [1/2, 2], zero elsewhere.
    CosineBump,
    /// 1 on [0, 2]; used with a single level.
    Constant,
}

impl BandFunction {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            BandFunction::CosineBump => {
                if (0.5..=2.0).contains(&x) {
                    (PI / 2.0 * x.log2()).cos().powi(2)
                } else {
                    0.0
                }
            }
            BandFunction::Constant => {
                if (0.0..=2.0 + 1e-9).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// zeta(2^-level x)
    pub fn level(self, level: i32, x: f64) -> f64 {
        self.eval(x * 2f64.powi(-level))
    }
}

/// Low-pass companion to levels lo.. of the cosine bump: 1 below 2^(lo-1),
/// sin^2(pi/2 (log2 x - lo)) up to 2^lo, zero above.
pub fn low_pass(lo: i32, x: f64) -> f64 {
    let edge = 2f64.powi(lo - 1);
    if x <= edge {
        1.0
    } else if x >= 2.0 * edge {
        0.0
    } else {
        (PI / 2.0 * (x.log2() - lo as f64)).sin().powi(2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletLevel {
    LowPass,
    Band(i32),
}

#[derive(Clone, Debug)]
pub struct WaveletBank {
    pub band: BandFunction,
    pub levels: Vec<WaveletLevel>,
    /// sqrt(zeta_l)(L') per level, same order as `levels`.
    pub kernels: Vec<DMatrix<f64>>,
    pub frame_lower: f64,
    pub frame_upper: f64,
}

fn level_weight(band: BandFunction, lowest: i32, level: WaveletLevel, x: f64) -> f64 {
    match level {
        WaveletLevel::LowPass => low_pass(lowest, x),
        WaveletLevel::Band(l) => band.level(l, x),
    }
}

/// Kernels sqrt(zeta_l)(L') for the band levels lo..=hi, plus the low-pass
/// kernel when `with_low_pass` is set.
pub fn wavelet_bank(
    spec: &SpectralDecomposition,
    band: BandFunction,
    lo: i32,
    hi: i32,
    with_low_pass: bool,
) -> Result<WaveletBank> {
    if lo > hi {
        return domain("empty level range");
    }
    let mut levels: Vec<WaveletLevel> = Vec::new();
    if with_low_pass {
        levels.push(WaveletLevel::LowPass);
    }
    levels.extend((lo..=hi).map(WaveletLevel::Band));
    let (frame_lower, frame_upper) = frame_bounds(spec, band, lo, &levels)?;
    let kernels = levels
        .iter()
        .map(|&lev| spec.apply_function(|x| level_weight(band, lo, lev, x.max(0.0)).sqrt()))
        .collect();
    Ok(WaveletBank { band, levels, kernels, frame_lower, frame_upper })
}

/// min and max over the spectrum of Sum_l zeta_l(lambda_j).
fn frame_bounds(spec: &SpectralDecomposition, band: BandFunction, lo: i32, levels: &[WaveletLevel]) -> Result<(f64, f64)> {
    let mut a = f64::INFINITY;
    let mut b: f64 = 0.0;
    for &l in &spec.eigenvalues {
        let s: f64 = levels.iter().map(|&lev| level_weight(band, lo, lev, l.max(0.0))).sum();
        if s <= 0.0 {
            return Err(Error::Frame(l));
        }
        a = a.min(s);
        b = b.max(s);
    }
    Ok((a, b))
}

impl WaveletBank {
    pub fn kernel(&self, level: WaveletLevel) -> Option<&DMatrix<f64>> {
        self.levels.iter().position(|&l| l == level).map(|i| &self.kernels[i])
    }

    /// Sum_l K_l^2.
    pub fn frame_operator(&self) -> DMatrix<f64> {
        let n = self.kernels.first().map_or(0, |k| k.nrows());
        self.kernels.iter().fold(DMatrix::zeros(n, n), |acc, k| acc + k * k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationBin {
    pub s_lo: f64,
    pub s_hi: f64,
    pub count: usize,
    pub mean: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationProfile {
    pub level: i32,
    pub epsilon: f64,
    /// (x, y, d_sp, |K_l(x, y)|)
    pub entries: Vec<(usize, usize, u32, f64)>,
    pub bins: Vec<LocalizationBin>,
}

impl LocalizationProfile {
    fn scale(&self) -> f64 {
        self.epsilon * 2f64.powi(-self.level)
    }

    /// Mean |K_l| over pairs with s = eps d_SP / 2^l in [lo, hi].
    pub fn band_mean(&self, lo: f64, hi: f64) -> Option<f64> {
        let sc = self.scale();
        let vals: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| (lo..=hi).contains(&(sc * e.2 as f64)))
            .map(|e| e.3)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    /// Far band [2, 4] over near band [0, 1].
    pub fn ratio(&self) -> Option<f64> {
        Some(self.band_mean(2.0, 4.0)? / self.band_mean(0.0, 1.0)?)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,d_sp,t_or_level,value")?;
        for e in &self.entries {
            writeln!(w, "{},{},{},{},{:.16e}", e.0, e.1, e.2, self.level, e.3)?;
        }
        Ok(())
    }
}

/// |K_l(x, y)| for the given sources against every vertex, binned by
/// s = eps d_SP(x, y) / 2^l in bins of width `bin_width`.
pub fn localization_profile(
    bank: &WaveletBank,
    graph: &Graph,
    level: i32,
    epsilon: f64,
    sources: &[usize],
    bin_width: f64,
) -> Result<LocalizationProfile> {
    let k = bank
        .kernel(WaveletLevel::Band(level))
        .ok_or_else(|| Error::Domain(format!("level {level} not in the bank")))?;
    if !(bin_width > 0.0) {
        return domain("bin width must be positive");
    }
    let mut entries = Vec::new();
    for &x in sources {
        let dist = graph.sp_distances_from(x);
        for (y, &d) in dist.iter().enumerate() {
            if d != UNREACHABLE {
                entries.push((x, y, d, k[(x, y)].abs()));
            }
        }
    }
    let mut profile = LocalizationProfile { level, epsilon, entries, bins: Vec::new() };
    let sc = profile.scale();
    let top = profile.entries.iter().map(|e| sc * e.2 as f64).fold(0.0, f64::max);
    let nbins = (top / bin_width).floor() as usize + 1;
    let mut bins: Vec<LocalizationBin> = (0..nbins)
        .map(|i| LocalizationBin { s_lo: i as f64 * bin_width, s_hi: (i + 1) as f64 * bin_width, count: 0, mean: 0.0, max: 0.0 })
        .collect();
    for e in &profile.entries {
        let b = &mut bins[((sc * e.2 as f64) / bin_width).floor() as usize];
        b.count += 1;
        b.mean += e.3;
        b.max = b.max.max(e.3);
    }
    for b in &mut bins {
        if b.count > 0 {
            b.mean /= b.count as f64;
        }
    }
    profile.bins = bins;
    Ok(profile)
}
