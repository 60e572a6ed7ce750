//! Bi-Lipschitz charts to the unit cube, grid cells, Hamming cell paths and
//! exact expected edge loads of random Hamming path ensembles.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geograph::Graph;
use crate::manifold::{ManifoldModel, PointCloud};
use crate::{rng, tolerant_ceil};

/// u |u|_2 / |u|_inf: closed unit ball onto [-1, 1]^k.
pub fn ball_to_cube(u: &[f64]) -> Vec<f64> {
    let inf = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if inf == 0.0 {
        return vec![0.0; u.len()];
    }
    let two = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter().map(|x| x * two / inf).collect()
}

/// Inverse of `ball_to_cube`.
pub fn cube_to_ball(c: &[f64]) -> Vec<f64> {
    let inf = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if inf == 0.0 {
        return vec![0.0; c.len()];
    }
    let two = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    c.iter().map(|x| x * inf / two).collect()
}

/// h = g0 . g1 . g2 . g3 from the closed geodesic ball B(center, r_M) onto
/// [0, 1]^k: log map, scaling by 1/r_M, ball-to-cube, affine to [0, 1]^k.
#[derive(Clone, Debug)]
pub struct CubeChart {
    model: ManifoldModel,
    center: Vec<f64>,
    pub r_m: f64,
    pub lmin_star: f64,
    pub lmax_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSummary {
    pub r_m: f64,
    pub lmin_star: f64,
    pub lmax_star: f64,
    pub l_min: f64,
    pub l_max: f64,
}

impl CubeChart {
    pub fn build(model: &ManifoldModel, center: &[f64], r_m: f64, lmin_star: f64, lmax_star: f64) -> Result<Self> {
        model.check_point(center)?;
        if !(r_m > 0.0 && r_m < model.r_bullet) {
            return domain(format!("chart radius {r_m} outside (0, r_bullet = {})", model.r_bullet));
        }
        if !(lmin_star > 0.0 && lmin_star <= lmax_star) {
            return domain("need 0 < L*_min <= L*_max");
        }
        Ok(Self { model: model.clone(), center: center.to_vec(), r_m, lmin_star, lmax_star })
    }

    pub fn k(&self) -> usize {
        self.model.k
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn l_min(&self) -> f64 {
        self.lmin_star / self.r_m
    }

    pub fn l_max(&self) -> f64 {
        self.lmax_star / self.r_m
    }

    pub fn summary(&self) -> ChartSummary {
        ChartSummary {
            r_m: self.r_m,
            lmin_star: self.lmin_star,
            lmax_star: self.lmax_star,
            l_min: self.l_min(),
            l_max: self.l_max(),
        }
    }

    pub fn contains(&self, y: &[f64]) -> Result<bool> {
        Ok(self.model.geodesic_distance(&self.center, y)? <= self.r_m)
    }

    pub fn forward(&self, y: &[f64]) -> Result<Vec<f64>> {
        let v = self.model.exp_inverse(&self.center, y)?;
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > self.r_m * (1.0 + 1e-12) {
            return domain(format!("point at distance {len} outside the chart ball"));
        }
        let u: Vec<f64> = v.iter().map(|x| x / self.r_m).collect();
        Ok(ball_to_cube(&u).iter().map(|c| (0.5 * (c + 1.0)).clamp(0.0, 1.0)).collect())
    }

    pub fn inverse(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.k() || z.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return domain("cube point outside [0, 1]^k");
        }
        let c: Vec<f64> = z.iter().map(|x| 2.0 * x - 1.0).collect();
        let v: Vec<f64> = cube_to_ball(&c).iter().map(|x| x * self.r_m).collect();
        self.model.exp_map(&self.center, &v)
    }

    /// Extremes of |h(x) - h(y)| / d_M(x, y) over random pairs in the ball.
    pub fn sample_distortion(&self, pairs: usize, seed: u64) -> Result<(f64, f64)> {
        let mut r = rng::stream(seed, rng::PAIRS);
        let k = self.k();
        let draw = |r: &mut rng::Rng| -> Result<Vec<f64>> {
            let z: Vec<f64> = (0..k).map(|_| r.random::<f64>()).collect();
            self.inverse(&z)
        };
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for _ in 0..pairs {
            let (x, y) = (draw(&mut r)?, draw(&mut r)?);
            let d = self.model.geodesic_distance(&x, &y)?;
            if d < 1e-9 * self.r_m {
                continue;
            }
            let (hx, hy) = (self.forward(&x)?, self.forward(&y)?);
            let q = hx.iter().zip(&hy).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / d;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        Ok((lo, hi))
    }
}

/// Regular grid of `cells_per_side`^k cells of width g on [0, 1]^k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub k: usize,
    pub cells_per_side: usize,
    pub g: f64,
}

impl GridSpec {
    pub fn new(k: usize, cells_per_side: usize) -> Result<Self> {
        if k == 0 || cells_per_side == 0 {
            return domain("grid needs k >= 1 and at least one cell per side");
        }
        Ok(Self { k, cells_per_side, g: 1.0 / cells_per_side as f64 })
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_side.pow(self.k as u32)
    }

    /// Multi-index of the cell housing z; cells are half-open except the
    /// last one per axis, which also takes the face at 1.
    pub fn cell_index(&self, z: &[f64]) -> Result<Vec<usize>> {
        if z.len() != self.k {
            return domain("cube point has the wrong dimension");
        }
        let m = self.cells_per_side;
        z.iter()
            .map(|&x| {
                if !(0.0..=1.0).contains(&x) {
                    return domain(format!("coordinate {x} outside [0, 1]"));
                }
                Ok(((x * m as f64).floor() as usize).min(m - 1))
            })
            .collect()
    }

    pub fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().rev().fold(0, |acc, &i| acc * self.cells_per_side + i)
    }

    pub fn multi(&self, mut lin: usize) -> Vec<usize> {
        (0..self.k)
            .map(|_| {
                let i = lin % self.cells_per_side;
                lin /= self.cells_per_side;
                i
            })
            .collect()
    }
}

/// 1/g = ceil(sqrt(k + 3) / (L_min eps)).
pub fn grid_width(k: usize, l_min: f64, epsilon: f64) -> Result<GridSpec> {
    let q = ((k + 3) as f64).sqrt() / (l_min * epsilon);
    if !(q.is_finite() && q >= 1.0) {
        return domain(format!("sqrt(k+3)/(L_min eps) = {q} is below 1"));
    }
    GridSpec::new(k, tolerant_ceil(q) as usize)
}

/// Cells from a to b, changing coordinate 0 first, then 1, and so on.
/// Includes both endpoints; a == b gives a single cell.
pub fn hamming_cell_path(a: &[usize], b: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = a.to_vec();
    let mut out = vec![cur.clone()];
    for d in 0..a.len() {
        while cur[d] != b[d] {
            if cur[d] < b[d] {
                cur[d] += 1;
            } else {
                cur[d] -= 1;
            }
            out.push(cur.clone());
        }
    }
    out
}

fn linear_path(grid: &GridSpec, a: &[usize], b: &[usize], out: &mut Vec<usize>) {
    out.clear();
    let mut cur = a.to_vec();
    out.push(grid.linear(&cur));
    for d in 0..a.len() {
        while cur[d] != b[d] {
            if cur[d] < b[d] {
                cur[d] += 1;
            } else {
                cur[d] -= 1;
            }
            out.push(grid.linear(&cur));
        }
    }
}

/// Random Hamming path ensemble on a vertex set, with exact expected loads.
#[derive(Clone, Debug)]
pub struct PathEnsemble {
    pub grid: GridSpec,
    /// Graph ids of the participating vertices, sorted.
    pub vertices: Vec<usize>,
    /// Cell (linear index) of each participating vertex.
    pub cell_of: Vec<usize>,
    /// Positions into `vertices` per cell.
    pub cells: Vec<Vec<usize>>,
    pub n_min: usize,
    pub n_max: usize,
    pub l_max: usize,
    /// Expected load per graph edge (graph ids, i < j), sorted.
    pub expected_loads: Vec<((usize, usize), f64)>,
    pub b_max: f64,
    /// Sum over ordered pairs of path lengths.
    pub total_length: f64,
}

impl PathEnsemble {
    pub fn total_load(&self) -> f64 {
        self.expected_loads.iter().map(|e| e.1).sum()
    }

    /// l_max <= k/g.
    pub fn l_max_bound(&self) -> f64 {
        self.grid.k as f64 * self.grid.cells_per_side as f64
    }

    /// (1 + N_max/N_min)^2 k / g^(k+1).
    pub fn b_max_bound(&self) -> f64 {
        let q = 1.0 + self.n_max as f64 / self.n_min as f64;
        q * q * self.grid.k as f64 * (self.grid.cells_per_side as f64).powi(self.grid.k as i32 + 1)
    }

    pub fn lemma_holds(&self) -> bool {
        self.l_max as f64 <= self.l_max_bound() && self.b_max <= self.b_max_bound()
    }

    /// Loads of one random path system: one uniform representative per
    /// interior cell, drawn independently for each ordered pair.
    pub fn sample_loads(&self, graph: &Graph, rng: &mut rng::Rng) -> Result<HashMap<(usize, usize), f64>> {
        let mut loads = HashMap::new();
        let mut path = Vec::new();
        let m = self.vertices.len();
        for x in 0..m {
            for y in 0..m {
                if x == y {
                    continue;
                }
                let (a, b) = (self.grid.multi(self.cell_of[x]), self.grid.multi(self.cell_of[y]));
                linear_path(&self.grid, &a, &b, &mut path);
                let mut seq = vec![x];
                if path.len() > 2 {
                    for &c in &path[1..path.len() - 1] {
                        let members = &self.cells[c];
                        seq.push(members[rng.random_range(0..members.len())]);
                    }
                }
                seq.push(y);
                for w in seq.windows(2) {
                    let (u, v) = (self.vertices[w[0]], self.vertices[w[1]]);
                    if !graph.has_edge(u, v) {
                        return Err(Error::NonAdjacent(u, v));
                    }
                    *loads.entry((u.min(v), u.max(v))).or_insert(0.0) += 1.0;
                }
            }
        }
        Ok(loads)
    }

    pub fn write_loads_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,j,expected_load")?;
        for ((i, j), b) in &self.expected_loads {
            writeln!(w, "{i},{j},{b:.16e}")?;
        }
        Ok(())
    }

    pub fn write_grid_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "vertex,cell")?;
        for (v, c) in self.vertices.iter().zip(&self.cell_of) {
            writeln!(w, "{v},{c}")?;
        }
        Ok(())
    }
}

/// Exact expected loads for random Hamming paths between all ordered pairs
/// of `vertices`, whose cube coordinates are `cube`.
///
/// Pairs in the same or neighboring cells use their direct edge. Otherwise
/// the first and last edges join a fixed endpoint to a uniform member of the
/// next cell (mass 1/N), and interior edges join uniform members of two
/// consecutive cells (mass 1/(N N')).
pub fn build_ensemble(graph: &Graph, vertices: &[usize], cube: &[Vec<f64>], grid: &GridSpec) -> Result<PathEnsemble> {
    if vertices.len() != cube.len() {
        return domain("one cube point per vertex required");
    }
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by_key(|&i| vertices[i]);
    let verts: Vec<usize> = order.iter().map(|&i| vertices[i]).collect();
    if verts.windows(2).any(|w| w[0] == w[1]) {
        return domain("repeated vertex in ensemble");
    }
    let mut cell_of = Vec::with_capacity(verts.len());
    for &i in &order {
        cell_of.push(grid.linear(&grid.cell_index(&cube[i])?));
    }
    let mut cells = vec![Vec::new(); grid.cell_count()];
    for (p, &c) in cell_of.iter().enumerate() {
        cells[c].push(p);
    }
    if let Some(empty) = cells.iter().position(Vec::is_empty) {
        return Err(Error::EmptyCell(empty));
    }
    let n_min = cells.iter().map(Vec::len).min().unwrap_or(0);
    let n_max = cells.iter().map(Vec::len).max().unwrap_or(0);

    let m = verts.len();
    let mut direct: HashMap<(usize, usize), f64> = HashMap::new();
    let mut first: HashMap<(usize, usize), f64> = HashMap::new();
    let mut last: HashMap<(usize, usize), f64> = HashMap::new();
    let mut interior: HashMap<(usize, usize), f64> = HashMap::new();
    let mut l_max = 0;
    let mut total_length = 0.0;
    let mut path = Vec::new();
    let multi: Vec<Vec<usize>> = (0..grid.cell_count()).map(|c| grid.multi(c)).collect();
    for x in 0..m {
        for y in 0..m {
            if x == y {
                continue;
            }
            linear_path(grid, &multi[cell_of[x]], &multi[cell_of[y]], &mut path);
            let l = path.len() - 1;
            if l <= 1 {
                *direct.entry((x.min(y), x.max(y))).or_insert(0.0) += 1.0;
                l_max = l_max.max(1);
                total_length += 1.0;
                continue;
            }
            *first.entry((x, path[1])).or_insert(0.0) += 1.0;
            *last.entry((path[l - 1], y)).or_insert(0.0) += 1.0;
            for w in path[1..l].windows(2) {
                *interior.entry((w[0].min(w[1]), w[0].max(w[1]))).or_insert(0.0) += 1.0;
            }
            l_max = l_max.max(l);
            total_length += l as f64;
        }
    }

    let mut loads: HashMap<(usize, usize), f64> = HashMap::new();
    let mut add = |a: usize, b: usize, mass: f64| -> Result<()> {
        let (u, v) = (verts[a], verts[b]);
        if !graph.has_edge(u, v) {
            return Err(Error::NonAdjacent(u, v));
        }
        *loads.entry((u.min(v), u.max(v))).or_insert(0.0) += mass;
        Ok(())
    };
    for (&(x, y), &c) in &direct {
        add(x, y, c)?;
    }
    for (&(x, cell), &c) in &first {
        let members = &cells[cell];
        for &z in members {
            add(x, z, c / members.len() as f64)?;
        }
    }
    for (&(cell, y), &c) in &last {
        let members = &cells[cell];
        for &z in members {
            add(z, y, c / members.len() as f64)?;
        }
    }
    for (&(ca, cb), &c) in &interior {
        let (ma, mb) = (&cells[ca], &cells[cb]);
        let mass = c / (ma.len() * mb.len()) as f64;
        for &a in ma {
            for &b in mb {
                add(a, b, mass)?;
            }
        }
    }
    let mut expected_loads: Vec<((usize, usize), f64)> = loads.into_iter().collect();
    expected_loads.sort_by_key(|e| e.0);
    let b_max = expected_loads.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(PathEnsemble {
        grid: grid.clone(),
        vertices: verts,
        cell_of,
        cells,
        n_min,
        n_max,
        l_max,
        expected_loads,
        b_max,
        total_length,
    })
}

/// Ensemble on the sample points inside the chart ball, mapped through the chart.
pub fn build_chart_ensemble(graph: &Graph, points: &PointCloud, chart: &CubeChart, grid: &GridSpec) -> Result<PathEnsemble> {
    let mut vertices = Vec::new();
    let mut cube = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if chart.contains(p)? {
            vertices.push(i);
            cube.push(chart.forward(p)?);
        }
    }
    build_ensemble(graph, &vertices, &cube, grid)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyReport {
    pub inner_radius: f64,
    pub w_minus: f64,
    pub w_plus_tilde: f64,
    pub p8: f64,
    pub precondition_ok: bool,
    pub lower_threshold: f64,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub n_min_ok: Option<bool>,
    /// 2k sqrt(k+3) / (L_min eps)
    pub l_max_corollary: f64,
    /// (1 + 2(1+delta) w+ / ((1-delta) w-))^2 k (2 sqrt(k+3) / (L_min eps))^(k+1)
    pub b_max_corollary: f64,
}

/// Occupancy probabilities for the grid cells of a chart.
pub fn verify_cell_occupancy_bounds(
    model: &ManifoldModel,
    chart: &CubeChart,
    ensemble: Option<&PathEnsemble>,
    n: usize,
    delta: f64,
    epsilon: f64,
) -> Result<OccupancyReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return domain("delta must lie in (0, 1)");
    }
    let k = model.k as i32;
    let root = ((model.k + 3) as f64).sqrt();
    let (l_min, l_max) = (chart.l_min(), chart.l_max());
    let inner_radius = l_min * epsilon / (4.0 * root * l_max);
    let w_minus = model.min_ball_measure(inner_radius)?;
    let w_plus_tilde = model.ball_measure_radius(epsilon)?;
    let cells = 2.0 * root / (l_min * epsilon);
    let nm1 = n as f64 - 1.0;
    let p8 = (2.0 * cells.powi(k) * (-delta * delta * nm1 * w_minus / 3.0).exp()).min(1.0);
    let lower_threshold = (1.0 - delta) * nm1 * w_minus;
    let q = 1.0 + 2.0 * (1.0 + delta) * w_plus_tilde / ((1.0 - delta) * w_minus);
    Ok(OccupancyReport {
        inner_radius,
        w_minus,
        w_plus_tilde,
        p8,
        precondition_ok: n as f64 >= 1.0 / ((1.0 - delta) * w_minus) + 1.0,
        lower_threshold,
        n_min: ensemble.map(|e| e.n_min),
        n_max: ensemble.map(|e| e.n_max),
        n_min_ok: ensemble.map(|e| e.n_min as f64 >= lower_threshold),
        l_max_corollary: model.k as f64 * cells,
        b_max_corollary: q * q * model.k as f64 * cells.powi(k + 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_map_round_trips() {
        for u in [[0.3, -0.4], [0.0, 1.0], [0.7, 0.7], [0.0, 0.0]] {
            let back = cube_to_ball(&ball_to_cube(&u));
            assert!(back.iter().zip(&u).all(|(a, b)| (a - b).abs() < 1e-15));
        }
        let c = ball_to_cube(&[0.6, 0.8]);
        assert!((c[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_index_round_trips() {
        let g = GridSpec::new(2, 5).unwrap();
        for c in 0..g.cell_count() {
            assert_eq!(g.linear(&g.multi(c)), c);
        }
    }
}
