//! Config-driven sweeps: sample, build the graph, run the certifiers per
//! seed, and aggregate the records.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::concentration::{ahlfors_degree_bounds, uniform_sqrt_deviation};
use crate::distance::{a3_check, check_ball_inclusions, check_ge_vs_manifold, check_sandwich_sp_ge, A3Check, PairPlan};
use crate::doubling::{certify_vd, exponent_u_degree, exponent_u_open, mass_floor, strict_mass_floor};
use crate::error::{Error, Result};
use crate::geograph::{EpsilonGraph, GraphMeasure, MeasureKind, Openness};
use crate::hamming::{build_chart_ensemble, grid_width, verify_cell_occupancy_bounds, CubeChart};
use crate::heat::{heat_kernel, localization_profile, subgaussian_envelope, wavelet_bank, BandFunction, SpectralDecomposition};
use crate::manifold::ManifoldModel;
use crate::params::{default_chart_lipschitz, AssumptionParams};
use crate::poincare::{ball_poincare_ratio, c_kappa_bound, certify_lpi, kappa_general, lpi_constants};
use crate::rng;

/// Tolerance on the wavelet frame partition.
pub const FRAME_TOL: f64 = 1e-8;
/// Relative slack on the path-congestion dominance check.
pub const DOMINANCE_TOL: f64 = 1e-9;

fn config_error<T>(location: impl Into<String>, message: impl Into<String>) -> Result<T> {
    Err(Error::Config { location: location.into(), message: message.into() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certifier {
    Sandwich,
    Geodesic,
    Inclusions,
    Deviation,
    Degrees,
    Doubling,
    DoublingDegree,
    Lpi,
    Hamming,
    Heat,
    Wavelet,
}

impl Certifier {
    pub const ALL: [Certifier; 11] = [
        Certifier::Sandwich,
        Certifier::Geodesic,
        Certifier::Inclusions,
        Certifier::Deviation,
        Certifier::Degrees,
        Certifier::Doubling,
        Certifier::DoublingDegree,
        Certifier::Lpi,
        Certifier::Hamming,
        Certifier::Heat,
        Certifier::Wavelet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Certifier::Sandwich => "sandwich",
            Certifier::Geodesic => "geodesic",
            Certifier::Inclusions => "inclusions",
            Certifier::Deviation => "deviation",
            Certifier::Degrees => "degrees",
            Certifier::Doubling => "doubling",
            Certifier::DoublingDegree => "doubling_degree",
            Certifier::Lpi => "lpi",
            Certifier::Hamming => "hamming",
            Certifier::Heat => "heat",
            Certifier::Wavelet => "wavelet",
        }
    }

    /// Needs the sampling assumptions on (epsilon, n) to be a certification.
    fn needs_a3(self) -> bool {
        matches!(
            self,
            Certifier::Geodesic | Certifier::Inclusions | Certifier::Doubling | Certifier::DoublingDegree | Certifier::Lpi
        )
    }
}

impl fmt::Display for Certifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Certifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Certifier::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config { location: "certifiers".into(), message: format!("unknown certifier '{s}'") })
    }
}

/// Parses a comma-separated certifier list.
pub fn parse_certifiers(text: &str) -> Result<Vec<Certifier>> {
    let mut out: Vec<Certifier> = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let c: Certifier = part.parse()?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

/// Flat `key = value` lines with `#` comments.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return config_error(format!("line {line_no}"), "expected 'key = value'");
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return config_error(format!("line {line_no}"), "empty key");
            }
            if entries.insert(key.clone(), (v.trim().to_string(), line_no)).is_some() {
                return config_error(format!("line {line_no}"), format!("duplicate key '{key}'"));
            }
        }
        Ok(Self { entries })
    }

    fn location(&self, key: &str) -> String {
        match self.entries.get(key) {
            Some((_, line)) => format!("line {line}, key '{key}'"),
            None => format!("key '{key}'"),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key).ok_or_else(|| Error::Config { location: format!("key '{key}'"), message: "missing".into() })
    }

    fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config { location: self.location(key), message: format!("cannot parse '{v}'") }),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::Config { location: self.location(key), message: format!("cannot parse '{s}'") })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EpsilonRule {
    Fixed { value: f64 },
    /// c (ln(n)^(1 + gamma) / n)^(1/k)
    Standard { c: f64, gamma: f64 },
}

impl EpsilonRule {
    pub fn epsilon(&self, n: usize, k: usize) -> f64 {
        match *self {
            EpsilonRule::Fixed { value } => value,
            EpsilonRule::Standard { c, gamma } => {
                let nf = n as f64;
                c * (nf.ln().powf(1.0 + gamma) / nf).powf(1.0 / k as f64)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloorKind {
    /// 8 ln(3 n^2 / p2) / n
    Theorem,
    /// 8 ln(4 n^2 / p2) / n
    Strict,
}

/// Everything a sweep needs, with all defaults resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub manifold_kind: String,
    pub manifold_params: Vec<f64>,
    pub n: Vec<usize>,
    pub epsilon: EpsilonRule,
    pub seeds: Vec<u64>,
    pub certifiers: Vec<Certifier>,
    pub params: AssumptionParams,
    pub v: f64,
    pub inclusions_centers: usize,
    pub inclusions_hop_radii: Vec<f64>,
    pub inclusions_geodesic_radii: Vec<f64>,
    pub doubling_floor: FloorKind,
    pub lpi_measure: MeasureKind,
    pub lpi_centers: usize,
    pub lpi_radii: Option<Vec<f64>>,
    pub lpi_max_enlarged: usize,
    pub hamming_r_m: f64,
    pub heat_t: Vec<f64>,
    pub heat_sources: usize,
    pub wavelet_lo: i32,
    pub wavelet_hi: i32,
    pub wavelet_level: i32,
    pub wavelet_sources: usize,
    pub wavelet_max_ratio: f64,
}

const KNOWN_KEYS: &[&str] = &[
    "manifold.kind",
    "manifold.params",
    "n",
    "epsilon",
    "epsilon.rule",
    "epsilon.c",
    "epsilon.gamma",
    "seeds",
    "certifiers",
    "lambda1",
    "lambda2",
    "delta",
    "p1",
    "p2",
    "v",
    "lmin_star",
    "lmax_star",
    "inclusions.centers",
    "inclusions.hop_radii",
    "inclusions.geodesic_radii",
    "doubling.floor",
    "lpi.measure",
    "lpi.centers",
    "lpi.radii",
    "lpi.max_enlarged",
    "hamming.r_m",
    "heat.t",
    "heat.sources",
    "wavelet.lo",
    "wavelet.hi",
    "wavelet.level",
    "wavelet.sources",
    "wavelet.max_ratio",
];

fn parse_seeds(raw: &RawConfig) -> Result<Vec<u64>> {
    let text = raw.required("seeds")?;
    if let Some((a, b)) = text.split_once("..") {
        let parse = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config { location: raw.location("seeds"), message: format!("bad seed bound '{s}'") })
        };
        let (a, b) = (parse(a)?, parse(b)?);
        if a > b {
            return config_error(raw.location("seeds"), "empty seed range");
        }
        return Ok((a..=b).collect());
    }
    raw.list("seeds").map(Option::unwrap_or_default)
}

impl Scenario {
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        if let Some(key) = raw.entries.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return config_error(raw.location(key), "unknown key");
        }
        let manifold_kind = raw.required("manifold.kind")?.to_string();
        let manifold_params: Vec<f64> = raw.list("manifold.params")?.unwrap_or_default();
        let model = ManifoldModel::from_spec(&manifold_kind, &manifold_params)
            .map_err(|e| Error::Config { location: raw.location("manifold.kind"), message: e.to_string() })?;
        let n: Vec<usize> = raw.list("n")?.unwrap_or_default();
        if n.is_empty() || n.iter().any(|&x| x < 4) {
            return config_error(raw.location("n"), "need a nonempty list of sizes >= 4");
        }
        let epsilon = match (raw.value::<f64>("epsilon")?, raw.raw("epsilon.rule")) {
            (Some(value), None) => EpsilonRule::Fixed { value },
            (None, Some("standard")) => EpsilonRule::Standard {
                c: raw.value("epsilon.c")?.ok_or_else(|| Error::Config {
                    location: "key 'epsilon.c'".into(),
                    message: "missing".into(),
                })?,
                gamma: raw.value("epsilon.gamma")?.unwrap_or(0.5),
            },
            (None, Some(other)) => return config_error(raw.location("epsilon.rule"), format!("unknown rule '{other}'")),
            (Some(_), Some(_)) => return config_error(raw.location("epsilon"), "give either epsilon or epsilon.rule"),
            (None, None) => return config_error("key 'epsilon'", "missing"),
        };
        for &m in &n {
            let e = epsilon.epsilon(m, model.k);
            if !(e > 0.0 && e.is_finite()) {
                return config_error(raw.location("epsilon"), format!("epsilon {e} for n = {m} is not positive"));
            }
        }
        let seeds = parse_seeds(raw)?;
        let certifiers = parse_certifiers(raw.required("certifiers")?)
            .map_err(|e| Error::Config { location: raw.location("certifiers"), message: e.to_string() })?;
        let reference = AssumptionParams::reference(model.k);
        let (lmin_default, lmax_default) = default_chart_lipschitz(model.k);
        let params = AssumptionParams {
            lambda1: raw.value("lambda1")?.unwrap_or(reference.lambda1),
            lambda2: raw.value("lambda2")?.unwrap_or(reference.lambda2),
            delta: raw.value("delta")?.unwrap_or(reference.delta),
            p1: raw.value("p1")?.unwrap_or(reference.p1),
            p2: raw.value("p2")?.unwrap_or(reference.p2),
            lmin_star: raw.value("lmin_star")?.unwrap_or(lmin_default),
            lmax_star: raw.value("lmax_star")?.unwrap_or(lmax_default),
        };
        params
            .validate()
            .map_err(|e| Error::Config { location: "assumption parameters".into(), message: e.to_string() })?;
        let measure = match raw.raw("lpi.measure").unwrap_or("degree") {
            "degree" => MeasureKind::DegreeVolume,
            "empirical" => MeasureKind::Empirical,
            other => return config_error(raw.location("lpi.measure"), format!("unknown measure '{other}'")),
        };
        let doubling_floor = match raw.raw("doubling.floor").unwrap_or("strict") {
            "strict" => FloorKind::Strict,
            "theorem" => FloorKind::Theorem,
            other => return config_error(raw.location("doubling.floor"), format!("unknown floor '{other}'")),
        };
        let scenario = Scenario {
            manifold_kind,
            manifold_params,
            n,
            epsilon,
            seeds,
            certifiers,
            v: raw.value("v")?.unwrap_or(model.doubling_v),
            params,
            inclusions_centers: raw.value("inclusions.centers")?.unwrap_or(20),
            inclusions_hop_radii: raw.list("inclusions.hop_radii")?.unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0]),
            inclusions_geodesic_radii: raw.list("inclusions.geodesic_radii")?.unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0]),
            doubling_floor,
            lpi_measure: measure,
            lpi_centers: raw.value("lpi.centers")?.unwrap_or(1),
            lpi_radii: raw.list("lpi.radii")?,
            lpi_max_enlarged: raw.value("lpi.max_enlarged")?.unwrap_or(crate::poincare::DEFAULT_ENLARGED_CAP),
            hamming_r_m: raw.value("hamming.r_m")?.unwrap_or(0.5 * model.r_bullet),
            heat_t: raw.list("heat.t")?.unwrap_or_else(|| vec![4.0, 9.0, 16.0]),
            heat_sources: raw.value("heat.sources")?.unwrap_or(20),
            wavelet_lo: raw.value("wavelet.lo")?.unwrap_or(-4),
            wavelet_hi: raw.value("wavelet.hi")?.unwrap_or(1),
            wavelet_level: raw.value("wavelet.level")?.unwrap_or(0),
            wavelet_sources: raw.value("wavelet.sources")?.unwrap_or(20),
            wavelet_max_ratio: raw.value("wavelet.max_ratio")?.unwrap_or(0.25),
        };
        if !(scenario.v > 0.0) {
            return config_error(raw.location("v"), "must be positive");
        }
        if !(scenario.hamming_r_m > 0.0 && scenario.hamming_r_m < model.r_bullet) {
            return config_error(raw.location("hamming.r_m"), format!("must lie in (0, {})", model.r_bullet));
        }
        if scenario.wavelet_lo > scenario.wavelet_hi
            || !(scenario.wavelet_lo..=scenario.wavelet_hi).contains(&scenario.wavelet_level)
        {
            return config_error(raw.location("wavelet.level"), "level range must be nonempty and contain the level");
        }
        if scenario.heat_t.iter().any(|&t| !(t > 0.0)) {
            return config_error(raw.location("heat.t"), "heat times must be positive");
        }
        Ok(scenario)
    }

    pub fn model(&self) -> Result<ManifoldModel> {
        ManifoldModel::from_spec(&self.manifold_kind, &self.manifold_params)
    }

    /// Keeps only the listed certifiers.
    pub fn restrict(&mut self, only: &[Certifier]) {
        self.certifiers.retain(|c| only.contains(c));
    }

    /// Resolved configuration, one `key = value` line per key.
    pub fn resolved_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut lines: Vec<(String, String)> = vec![
            ("manifold.kind".into(), self.manifold_kind.clone()),
            ("manifold.params".into(), join(&self.manifold_params)),
            ("n".into(), self.n.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")),
            ("seeds".into(), self.seeds.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")),
            ("certifiers".into(), self.certifiers.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")),
            ("lambda1".into(), self.params.lambda1.to_string()),
            ("lambda2".into(), self.params.lambda2.to_string()),
            ("delta".into(), self.params.delta.to_string()),
            ("p1".into(), self.params.p1.to_string()),
            ("p2".into(), self.params.p2.to_string()),
            ("v".into(), self.v.to_string()),
            ("lmin_star".into(), self.params.lmin_star.to_string()),
            ("lmax_star".into(), self.params.lmax_star.to_string()),
            ("inclusions.centers".into(), self.inclusions_centers.to_string()),
            ("inclusions.hop_radii".into(), join(&self.inclusions_hop_radii)),
            ("inclusions.geodesic_radii".into(), join(&self.inclusions_geodesic_radii)),
            (
                "doubling.floor".into(),
                match self.doubling_floor {
                    FloorKind::Strict => "strict",
                    FloorKind::Theorem => "theorem",
                }
                .into(),
            ),
            (
                "lpi.measure".into(),
                match self.lpi_measure {
                    MeasureKind::DegreeVolume => "degree",
                    MeasureKind::Empirical => "empirical",
                }
                .into(),
            ),
            ("lpi.centers".into(), self.lpi_centers.to_string()),
            ("lpi.max_enlarged".into(), self.lpi_max_enlarged.to_string()),
            ("hamming.r_m".into(), self.hamming_r_m.to_string()),
            ("heat.t".into(), join(&self.heat_t)),
            ("heat.sources".into(), self.heat_sources.to_string()),
            ("wavelet.lo".into(), self.wavelet_lo.to_string()),
            ("wavelet.hi".into(), self.wavelet_hi.to_string()),
            ("wavelet.level".into(), self.wavelet_level.to_string()),
            ("wavelet.sources".into(), self.wavelet_sources.to_string()),
            ("wavelet.max_ratio".into(), self.wavelet_max_ratio.to_string()),
        ];
        if let Some(r) = &self.lpi_radii {
            lines.push(("lpi.radii".into(), join(r)));
        }
        match self.epsilon {
            EpsilonRule::Fixed { value } => lines.push(("epsilon".into(), value.to_string())),
            EpsilonRule::Standard { c, gamma } => {
                lines.push(("epsilon.rule".into(), "standard".into()));
                lines.push(("epsilon.c".into(), c.to_string()));
                lines.push(("epsilon.gamma".into(), gamma.to_string()));
            }
        }
        lines.sort();
        lines.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub relation: String,
    pub rhs: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, lhs: f64, relation: &str, rhs: f64) -> Self {
        let passed = match relation {
            "<" => lhs < rhs,
            "<=" => lhs <= rhs,
            ">=" => lhs >= rhs,
            _ => false,
        };
        Self { name: name.into(), lhs, relation: relation.into(), rhs, passed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preflight {
    pub n: usize,
    pub epsilon: f64,
    pub a3: A3Check,
    pub checks: Vec<Check>,
    /// Certifiers whose assumptions fail; their verdicts are report-only.
    pub report_only: Vec<Certifier>,
}

impl Preflight {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Numeric evaluation of the assumptions for one (n, epsilon).
pub fn preflight(scenario: &Scenario, model: &ManifoldModel, n: usize, epsilon: f64) -> Result<Preflight> {
    let p = &scenario.params;
    let a3 = a3_check(model, n, epsilon, p)?;
    let mut checks = vec![
        Check::new("a3_epsilon", a3.epsilon, "<", a3.epsilon_bound),
        Check::new("a3_sample_size", n as f64, ">=", a3.n_threshold),
    ];
    let lpi = lpi_constants(p, model, n, epsilon, 1.0 / n as f64, 1.0 / n as f64)?;
    checks.push(Check::new("lpi_sample_size", n as f64, ">=", lpi.n_threshold));
    checks.push(Check::new("lpi_radius_range", 1.0, "<", lpi.r_plus));
    let chart_l_min = p.lmin_star / scenario.hamming_r_m;
    checks.push(Check::new(
        "hamming_grid",
        ((model.k + 3) as f64).sqrt() / (chart_l_min * epsilon),
        ">=",
        1.0,
    ));
    let mut report_only = Vec::new();
    for &c in &scenario.certifiers {
        let demote = (c.needs_a3() && !a3.passed())
            || (c == Certifier::Lpi && !(checks[2].passed && checks[3].passed));
        if demote {
            report_only.push(c);
        }
    }
    Ok(Preflight { n, epsilon, a3, checks, report_only })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Certify,
    ReportOnly,
}

/// One line of report.jsonl.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub seed: u64,
    pub n: usize,
    pub epsilon: f64,
    pub certifier: String,
    pub mode: Mode,
    pub outcome: Outcome,
    /// A deterministic statement was violated.
    pub hard_violation: bool,
    pub statistic: Option<f64>,
    pub bound: Option<f64>,
    /// Probability with which the certified statement may fail.
    pub failure_probability: Option<f64>,
    /// Fraction of individual checks (pairs, balls) that passed.
    pub unit_pass_fraction: Option<f64>,
    pub units: Option<usize>,
    pub details: Value,
    pub error: Option<String>,
    pub params: Value,
}

struct Outcomes {
    pass: bool,
    hard_violation: bool,
    statistic: Option<f64>,
    bound: Option<f64>,
    failure_probability: Option<f64>,
    unit_pass_fraction: Option<f64>,
    units: Option<usize>,
    details: Value,
}

impl Outcomes {
    fn new(pass: bool, statistic: f64, bound: f64, details: Value) -> Self {
        Self {
            pass,
            hard_violation: false,
            statistic: Some(statistic),
            bound: Some(bound),
            failure_probability: None,
            unit_pass_fraction: None,
            units: None,
            details,
        }
    }

    fn prob(mut self, p: f64) -> Self {
        self.failure_probability = Some(p.clamp(0.0, 1.0));
        self
    }

    fn units(mut self, passed: usize, total: usize) -> Self {
        self.units = Some(total);
        self.unit_pass_fraction = Some(if total == 0 { 1.0 } else { passed as f64 / total as f64 });
        self
    }
}

fn params_block(scenario: &Scenario, model: &ManifoldModel, n: usize, epsilon: f64, seed: u64) -> Value {
    json!({
        "manifold": {"kind": scenario.manifold_kind, "params": scenario.manifold_params, "k": model.k},
        "n": n,
        "epsilon": epsilon,
        "seed": seed,
        "assumptions": scenario.params,
        "v": scenario.v,
        "inclusions": {
            "centers": scenario.inclusions_centers,
            "hop_radii": scenario.inclusions_hop_radii,
            "geodesic_radii": scenario.inclusions_geodesic_radii,
        },
        "doubling_floor": scenario.doubling_floor,
        "lpi": {
            "measure": scenario.lpi_measure,
            "centers": scenario.lpi_centers,
            "radii": scenario.lpi_radii,
            "max_enlarged": scenario.lpi_max_enlarged,
        },
        "hamming_r_m": scenario.hamming_r_m,
        "heat": {"t": scenario.heat_t, "sources": scenario.heat_sources},
        "wavelet": {
            "lo": scenario.wavelet_lo,
            "hi": scenario.wavelet_hi,
            "level": scenario.wavelet_level,
            "sources": scenario.wavelet_sources,
            "max_ratio": scenario.wavelet_max_ratio,
        },
    })
}

fn pick(seed: u64, stream: u64, n: usize, count: usize) -> Vec<usize> {
    let mut r = rng::stream(seed, stream);
    let mut v = sample(&mut r, n, count.min(n)).into_vec();
    v.sort_unstable();
    v
}

struct SeedContext<'a> {
    scenario: &'a Scenario,
    model: &'a ManifoldModel,
    graph: EpsilonGraph,
    seed: u64,
    spectral: Option<SpectralDecomposition>,
}

impl SeedContext<'_> {
    fn n(&self) -> usize {
        self.graph.n()
    }

    fn eps(&self) -> f64 {
        self.graph.epsilon()
    }

    fn ensure_spectral(&mut self) -> Result<()> {
        if self.spectral.is_none() {
            self.spectral = Some(SpectralDecomposition::of(self.graph.graph())?);
        }
        Ok(())
    }

    fn run(&mut self, c: Certifier) -> Result<Outcomes> {
        let p = self.scenario.params.clone();
        let n = self.n();
        let eps = self.eps();
        let g = self.graph.graph();
        match c {
            Certifier::Sandwich => {
                let r = check_sandwich_sp_ge(&self.graph, &PairPlan::for_size(n, self.seed))?;
                let ok = r.verdict.passed();
                let mut o = Outcomes::new(ok, r.max_slack, 1.0, serde_json::to_value(&r)?)
                    .units(r.pairs_checked - r.violations.len(), r.pairs_checked);
                o.hard_violation = !ok;
                Ok(o)
            }
            Certifier::Geodesic => {
                let r = check_ge_vs_manifold(&self.graph, self.model, &p, &PairPlan::for_size(n, self.seed))?;
                Ok(Outcomes::new(r.verdict.passed(), r.max_slack, 1.0, serde_json::to_value(&r)?)
                    .prob(p.p1)
                    .units(r.pairs_checked - r.violations.len(), r.pairs_checked))
            }
            Certifier::Inclusions => {
                let centers = pick(self.seed, rng::CENTERS, n, self.scenario.inclusions_centers);
                let geo: Vec<f64> = self.scenario.inclusions_geodesic_radii.iter().map(|m| m * eps).collect();
                let r = check_ball_inclusions(&self.graph, self.model, &p, &self.scenario.inclusions_hop_radii, &geo, &centers)?;
                Ok(Outcomes::new(r.verdict.passed(), r.violations.len() as f64, 0.0, serde_json::to_value(&r)?)
                    .prob(p.p1)
                    .units(r.pairs_checked - r.violations.len(), r.pairs_checked))
            }
            Certifier::Deviation => {
                let r = uniform_sqrt_deviation(self.graph.points(), self.model, p.p2)?;
                let details = json!({
                    "sup_value": r.sup_value,
                    "bound": r.bound,
                    "bound_3n2": r.bound_3n2,
                    "within_bound_3n2": r.within_bound_3n2,
                    "corollary_balls": r.corollary_balls,
                    "corollary_holds": r.corollary_holds,
                });
                Ok(Outcomes::new(r.within_bound, r.sup_value, r.bound, details).prob(p.p2))
            }
            Certifier::Degrees => {
                let b = ahlfors_degree_bounds(self.model, n, eps, p.delta, p.lambda1)?;
                let (lo, hi) = (g.min_degree(), g.max_degree());
                let ok = b.contains(lo, hi);
                let details = json!({"min_degree": lo, "max_degree": hi, "bounds": b});
                Ok(Outcomes::new(ok, lo as f64, b.lower_threshold, details).prob(b.failure_lower + b.failure_upper))
            }
            Certifier::Doubling | Certifier::DoublingDegree => {
                let floor = match self.scenario.doubling_floor {
                    FloorKind::Strict => strict_mass_floor(n, p.p2)?,
                    FloorKind::Theorem => mass_floor(n, p.p2)?,
                };
                let (measure, u, openness) = if c == Certifier::Doubling {
                    (GraphMeasure::empirical(n), exponent_u_open(p.lambda1, p.lambda2, self.scenario.v)?, Openness::Open)
                } else {
                    let c_bullet = g.max_degree() as f64 / g.min_degree() as f64;
                    (GraphMeasure::degree_volume(g)?, exponent_u_degree(self.scenario.v, c_bullet)?, Openness::Closed)
                };
                let r = certify_vd(g, &measure, None, floor, u, openness)?;
                let details = json!({
                    "floor": r.floor,
                    "exponent_u": r.exponent_u,
                    "total_balls": r.total_balls,
                    "qualifying_balls": r.qualifying_balls,
                    "max_ratio_all": r.max_ratio_all,
                    "violations": r.violations,
                    "sub_floor_violations": r.sub_floor_violations.len(),
                    "r_grid_max": r.r_grid.last(),
                });
                Ok(Outcomes::new(r.verdict.passed(), r.max_ratio, r.bound, details)
                    .prob(p.p1 + p.p2)
                    .units(r.qualifying_balls - r.violations.len(), r.qualifying_balls))
            }
            Certifier::Lpi => {
                let (eta_plus, eta_minus) = match self.scenario.lpi_measure {
                    MeasureKind::Empirical => (1.0 / n as f64, 1.0 / n as f64),
                    MeasureKind::DegreeVolume => {
                        let vol = g.volume(&(0..n).collect::<Vec<_>>()) as f64;
                        (g.max_degree() as f64 / vol, g.min_degree() as f64 / vol)
                    }
                };
                let k = lpi_constants(&p, self.model, n, eps, eta_plus, eta_minus)?;
                let radii = match &self.scenario.lpi_radii {
                    Some(r) => r.clone(),
                    None => (1..).map(|r| r as f64).take_while(|&r| r < k.r_plus).collect(),
                };
                let centers = pick(self.seed, rng::CENTERS, n, self.scenario.lpi_centers);
                let r = certify_lpi(g, self.scenario.lpi_measure, &k, &centers, &radii, self.scenario.lpi_max_enlarged)?;
                let total = r.results.len();
                let details = json!({"constants": k, "results": r.results, "skipped": r.skipped});
                let prob = (n as f64).powi(2) * k.p4 + p.p1;
                Ok(Outcomes::new(r.failures == 0, r.max_c_emp, r.bound, details)
                    .prob(prob)
                    .units(total - r.failures, total))
            }
            Certifier::Hamming => self.hamming(),
            Certifier::Heat => {
                let t_grid = self.scenario.heat_t.clone();
                let sources = pick(self.seed, rng::SOURCES, n, self.scenario.heat_sources);
                let r_plus = ((1.0 - p.lambda1) * self.model.r_bullet / eps).min(n as f64);
                self.ensure_spectral()?;
                let spec = self.spectral.as_ref().expect("computed above");
                let kernel = heat_kernel(spec, t_grid[0])?;
                let env = subgaussian_envelope(self.graph.graph(), spec, &t_grid, &sources, Some((1.0, r_plus)))?;
                let details = json!({
                    "slope": env.slope,
                    "intercept": env.intercept,
                    "c1_hat": env.c1_hat,
                    "c2_hat": env.c2_hat,
                    "max_positive_residual": env.max_positive_residual,
                    "points": env.points.len(),
                    "dropped": env.dropped.len(),
                    "distinct_d_sp": env.distinct_d_sp,
                    "degenerate": env.degenerate,
                    "in_window": env.in_window,
                    "row_sum_error": kernel.max_row_sum_error(),
                    "symmetry_error": kernel.symmetry_error(),
                    "min_entry": kernel.min_entry(),
                });
                Ok(Outcomes::new(env.verdict.passed(), env.slope.unwrap_or(f64::NAN), 0.0, details))
            }
            Certifier::Wavelet => {
                let sc = self.scenario.clone();
                let sources = pick(self.seed, rng::SOURCES, n, sc.wavelet_sources);
                self.ensure_spectral()?;
                let spec = self.spectral.as_ref().expect("computed above");
                let bank = wavelet_bank(spec, BandFunction::CosineBump, sc.wavelet_lo, sc.wavelet_hi, true)?;
                let prof = localization_profile(&bank, self.graph.graph(), sc.wavelet_level, eps, &sources, 0.5)?;
                let ratio = prof.ratio();
                let frame_ok = (bank.frame_lower - 1.0).abs() <= FRAME_TOL && (bank.frame_upper - 1.0).abs() <= FRAME_TOL;
                let ok = frame_ok && ratio.is_some_and(|r| r <= sc.wavelet_max_ratio);
                let details = json!({
                    "frame_lower": bank.frame_lower,
                    "frame_upper": bank.frame_upper,
                    "near_mean": prof.band_mean(0.0, 1.0),
                    "far_mean": prof.band_mean(2.0, 4.0),
                    "bins": prof.bins,
                });
                Ok(Outcomes::new(ok, ratio.unwrap_or(f64::NAN), sc.wavelet_max_ratio, details))
            }
        }
    }

    fn hamming(&self) -> Result<Outcomes> {
        let p = &self.scenario.params;
        let (n, eps, g) = (self.n(), self.eps(), self.graph.graph());
        let center = pick(self.seed, rng::CENTERS, n, 1)[0];
        let r_m = self.scenario.hamming_r_m;
        let chart = CubeChart::build(self.model, self.graph.points().point(center), r_m, p.lmin_star, p.lmax_star)?;
        let grid = grid_width(self.model.k, chart.l_min(), eps)?;
        let ensemble = match build_chart_ensemble(g, self.graph.points(), &chart, &grid) {
            Ok(e) => e,
            Err(Error::EmptyCell(cell)) => {
                let occ = verify_cell_occupancy_bounds(self.model, &chart, None, n, p.delta, eps)?;
                let details = json!({"valid": false, "empty_cell": cell, "cells_per_side": grid.cells_per_side, "occupancy": occ});
                return Ok(Outcomes::new(false, f64::NAN, f64::NAN, details).prob(occ.p8));
            }
            Err(e) => return Err(e),
        };
        let occ = verify_cell_occupancy_bounds(self.model, &chart, Some(&ensemble), n, p.delta, eps)?;
        let m = ensemble.vertices.len();
        let eta = 1.0 / n as f64;
        let kappa = kappa_general(&vec![eta; m], ensemble.l_max as f64, ensemble.b_max)?;
        let optimal = ball_poincare_ratio(g, &vec![eta; n], &ensemble.vertices, &ensemble.vertices)?;
        let ck = c_kappa_bound(
            n,
            eps,
            self.model.k,
            p.lmin_star,
            p.lmax_star,
            self.model.c_lower,
            self.model.c_upper,
            p.delta,
            eta,
            eta,
        )?;
        let l_ok = ensemble.l_max as f64 <= ensemble.l_max_bound();
        let b_ok = ensemble.b_max <= ensemble.b_max_bound();
        let dominance = optimal <= kappa * (1.0 + DOMINANCE_TOL);
        let kappa_ok = kappa <= ck.value * r_m * r_m;
        let details = json!({
            "valid": true,
            "center": center,
            "chart": chart.summary(),
            "cells_per_side": grid.cells_per_side,
            "vertices": m,
            "n_min": ensemble.n_min,
            "n_max": ensemble.n_max,
            "l_max": ensemble.l_max,
            "l_max_bound": ensemble.l_max_bound(),
            "b_max": ensemble.b_max,
            "b_max_bound": ensemble.b_max_bound(),
            "kappa": kappa,
            "optimal_constant": optimal,
            "dominance": dominance,
            "c_kappa_r2": ck.value * r_m * r_m,
            "kappa_within_c_kappa": kappa_ok,
            "c_kappa_preconditions": ck.preconditions_ok,
            "occupancy": occ,
        });
        let hard_ok = l_ok && b_ok && dominance;
        let mut o = Outcomes::new(hard_ok && occ.n_min_ok == Some(true) && kappa_ok, ensemble.b_max, ensemble.b_max_bound(), details)
            .prob(occ.p8);
        o.hard_violation = !hard_ok;
        Ok(o)
    }
}

/// Records for one (n, seed): one per certifier, or an error record that
/// ends the seed.
pub fn run_seed(scenario: &Scenario, model: &ManifoldModel, pre: &Preflight, seed: u64) -> Vec<Record> {
    let (n, eps) = (pre.n, pre.epsilon);
    let params = params_block(scenario, model, n, eps, seed);
    let base = |certifier: &str| Record {
        seed,
        n,
        epsilon: eps,
        certifier: certifier.to_string(),
        mode: Mode::Certify,
        outcome: Outcome::Error,
        hard_violation: false,
        statistic: None,
        bound: None,
        failure_probability: None,
        unit_pass_fraction: None,
        units: None,
        details: Value::Null,
        error: None,
        params: params.clone(),
    };
    if scenario.certifiers.is_empty() {
        return Vec::new();
    }
    let graph = match EpsilonGraph::build(model.sample(n, seed), eps).and_then(|g| {
        g.graph().require_connected()?;
        Ok(g)
    }) {
        Ok(g) => g,
        Err(e) => {
            let mut r = base("graph");
            r.error = Some(e.to_string());
            return vec![r];
        }
    };
    let mut ctx = SeedContext { scenario, model, graph, seed, spectral: None };
    let mut out = Vec::new();
    for &c in &scenario.certifiers {
        let mut rec = base(c.name());
        if pre.report_only.contains(&c) {
            rec.mode = Mode::ReportOnly;
        }
        match ctx.run(c) {
            Ok(o) => {
                rec.outcome = if o.pass { Outcome::Pass } else { Outcome::Fail };
                rec.hard_violation = o.hard_violation;
                rec.statistic = o.statistic.filter(|x| x.is_finite());
                rec.bound = o.bound.filter(|x| x.is_finite());
                rec.failure_probability = o.failure_probability;
                rec.unit_pass_fraction = o.unit_pass_fraction;
                rec.units = o.units;
                rec.details = o.details;
                out.push(rec);
            }
            Err(e) => {
                rec.error = Some(e.to_string());
                out.push(rec);
                break;
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub kind: String,
    pub scenario: Scenario,
    pub model: ManifoldModel,
    pub preflight: Vec<Preflight>,
    /// n eps^k / ln n along the n list; should increase for a standard schedule.
    pub schedule_ratios: Vec<f64>,
    pub schedule_increasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub header: Header,
    pub records: Vec<Record>,
}

impl RunOutput {
    pub fn hard_violation(&self) -> bool {
        self.records.iter().any(|r| r.hard_violation)
    }

    /// report.jsonl: the header line, then the records in (n, seed) order.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut s = serde_json::to_string(&self.header)?;
        s.push('\n');
        for r in &self.records {
            s.push_str(&serde_json::to_string(r)?);
            s.push('\n');
        }
        Ok(s)
    }
}

/// Runs every (n, seed) with up to `workers` threads; output order does not
/// depend on the worker count.
pub fn run(scenario: &Scenario, workers: usize) -> Result<RunOutput> {
    let model = scenario.model()?;
    let mut preflights = Vec::new();
    for &n in &scenario.n {
        preflights.push(preflight(scenario, &model, n, scenario.epsilon.epsilon(n, model.k))?);
    }
    let schedule_ratios: Vec<f64> = preflights
        .iter()
        .map(|p| p.n as f64 * p.epsilon.powi(model.k as i32) / (p.n as f64).ln())
        .collect();
    let schedule_increasing = schedule_ratios.windows(2).all(|w| w[1] > w[0]);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let jobs: Vec<(usize, u64)> =
        (0..preflights.len()).flat_map(|i| scenario.seeds.iter().map(move |&s| (i, s))).collect();
    let per_job: Vec<Vec<Record>> =
        pool.install(|| jobs.par_iter().map(|&(i, seed)| run_seed(scenario, &model, &preflights[i], seed)).collect());
    Ok(RunOutput {
        header: Header {
            kind: "header".into(),
            scenario: scenario.clone(),
            model,
            preflight: preflights,
            schedule_ratios,
            schedule_increasing,
        },
        records: per_job.into_iter().flatten().collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifierSummary {
    pub certifier: String,
    pub n: usize,
    pub runs: usize,
    pub passes: usize,
    pub errors: usize,
    pub pass_fraction: f64,
    /// Pass fraction over individual pairs or balls, pooled across seeds.
    pub unit_pass_fraction: Option<f64>,
    pub hard_violations: usize,
    pub report_only: bool,
    /// 1 - (largest failure probability over seeds); None for diagnostics.
    pub floor: Option<f64>,
    pub meets_floor: Option<bool>,
    pub mean_statistic: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub certifier: String,
    /// Slope of ln(mean statistic) against ln(n).
    pub log_log_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub certifiers: Vec<CertifierSummary>,
    pub trends: Vec<Trend>,
}

/// Pass fractions per (certifier, n) against 1 - (sum of the relevant
/// failure probabilities), plus log-log trends of the statistic over n.
pub fn summarize(records: &[Record]) -> Summary {
    let mut groups: BTreeMap<(String, usize), Vec<&Record>> = BTreeMap::new();
    for r in records {
        groups.entry((r.certifier.clone(), r.n)).or_default().push(r);
    }
    let mut certifiers = Vec::new();
    for ((name, n), rs) in &groups {
        let runs = rs.len();
        let passes = rs.iter().filter(|r| r.outcome == Outcome::Pass).count();
        let errors = rs.iter().filter(|r| r.outcome == Outcome::Error).count();
        let units: usize = rs.iter().filter_map(|r| r.units).sum();
        let unit_passes: f64 = rs
            .iter()
            .filter_map(|r| Some(r.unit_pass_fraction? * r.units? as f64))
            .sum();
        let probs: Vec<f64> = rs.iter().filter_map(|r| r.failure_probability).collect();
        let floor = (!probs.is_empty()).then(|| 1.0 - probs.iter().copied().fold(0.0, f64::max));
        let pass_fraction = passes as f64 / runs as f64;
        let stats: Vec<f64> = rs.iter().filter_map(|r| r.statistic).collect();
        certifiers.push(CertifierSummary {
            certifier: name.clone(),
            n: *n,
            runs,
            passes,
            errors,
            pass_fraction,
            unit_pass_fraction: (units > 0).then(|| unit_passes / units as f64),
            hard_violations: rs.iter().filter(|r| r.hard_violation).count(),
            report_only: rs.iter().any(|r| r.mode == Mode::ReportOnly),
            floor,
            meets_floor: floor.map(|f| pass_fraction >= f),
            mean_statistic: (!stats.is_empty()).then(|| stats.iter().sum::<f64>() / stats.len() as f64),
        });
    }
    let mut trends = Vec::new();
    let names: Vec<String> = {
        let mut v: Vec<String> = certifiers.iter().map(|c| c.certifier.clone()).collect();
        v.dedup();
        v
    };
    for name in names {
        let pts: Vec<(f64, f64)> = certifiers
            .iter()
            .filter(|c| c.certifier == name)
            .filter_map(|c| c.mean_statistic.filter(|s| *s > 0.0).map(|s| ((c.n as f64).ln(), s.ln())))
            .collect();
        if pts.len() >= 2 {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if let Some((slope, _)) = crate::heat::fit_line(&xs, &ys) {
                trends.push(Trend { certifier: name, log_log_slope: slope });
            }
        }
    }
    Summary { certifiers, trends }
}

/// Writes report.jsonl, resolved_config.txt, summary.json and one CSV per
/// certifier into `dir`.
pub fn write_outputs(dir: &Path, output: &RunOutput) -> Result<Summary> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.jsonl"), output.to_jsonl()?)?;
    fs::write(dir.join("resolved_config.txt"), output.header.scenario.resolved_text())?;
    let summary = summarize(&output.records);
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    for c in &output.header.scenario.certifiers {
        let mut f = fs::File::create(dir.join(format!("{}.csv", c.name())))?;
        writeln!(f, "n,seed,mode,outcome,hard_violation,statistic,bound,failure_probability,unit_pass_fraction")?;
        for r in output.records.iter().filter(|r| r.certifier == c.name()) {
            let opt = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.seed,
                match r.mode {
                    Mode::Certify => "certify",
                    Mode::ReportOnly => "report_only",
                },
                match r.outcome {
                    Outcome::Pass => "pass",
                    Outcome::Fail => "fail",
                    Outcome::Error => "error",
                },
                r.hard_violation,
                opt(r.statistic),
                opt(r.bound),
                opt(r.failure_probability),
                opt(r.unit_pass_fraction),
            )?;
        }
    }
    Ok(summary)
}
