//! Run configuration: parsing (JSON or TOML), per-subcommand key checks,
//! defaults and range validation.

use std::path::{Path, PathBuf};

use flowsde::dfsde::{DriftSpec, Interaction, TerminalDatum};
use flowsde::fbm::FbmMethod;
use flowsde::{DiscreteSignedMeasure, GridSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::measure::{measure_ingest, IngestReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    FbmSample,
    GirsanovCheck,
    ForwardNs,
    BackwardNs,
    OracleCompare,
    Diagnostics,
}

impl Subcommand {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FbmSample => "fbm-sample",
            Self::GirsanovCheck => "girsanov-check",
            Self::ForwardNs => "forward-ns",
            Self::BackwardNs => "backward-ns",
            Self::OracleCompare => "oracle-compare",
            Self::Diagnostics => "diagnostics",
        }
    }

    /// Keys a config for this subcommand may set, besides the common ones.
    fn keys(&self) -> &'static [&'static str] {
        match self {
            Self::FbmSample => &["H", "T", "N", "M", "dim", "method"],
            Self::GirsanovCheck => &["H", "T", "N", "M", "constant_drift", "x0"],
            Self::ForwardNs => &["H", "T", "N", "M", "eps", "measure", "grid", "interaction", "method", "radii", "angles"],
            Self::BackwardNs => &["T", "N", "M", "eps", "terminal", "grid", "truncation", "max_iter", "tol", "antithetic"],
            Self::OracleCompare => &["T", "N", "M", "eps", "measure", "grid", "interaction", "oracle"],
            Self::Diagnostics => &["H", "T", "N", "M", "drift", "grid", "checks"],
        }
    }
}

const COMMON_KEYS: &[&str] = &["subcommand", "seed", "out", "threads", "tolerances"];

/// A measure given inline as rows `[y1, y2, w]`, as a CSV file, or as a
/// Gauss–Hermite discretized Gaussian blob. Resolution always inlines the
/// rows so that a manifest is self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blob: Option<BlobSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    #[serde(default)]
    pub center: [f64; 2],
    pub sigma: f64,
    #[serde(default = "one")]
    pub mass: f64,
    /// Nodes per axis, at most 5.
    #[serde(default = "five")]
    pub nodes: usize,
}

fn one() -> f64 {
    1.0
}

fn five() -> usize {
    5
}

/// Cell-centred square grid on [-half, half]² with n cells per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half: f64,
    pub n: usize,
}

impl GridConfig {
    pub fn spec(&self) -> CliResult<GridSpec> {
        Ok(GridSpec::centered(self.half, self.n)?)
    }
}

/// Periodic box of the spectral oracle and its start time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleBox {
    pub half: f64,
    pub n: usize,
    /// The oracle starts from the heat-evolved measure at t0.
    pub t0: f64,
    pub steps: usize,
}

impl Default for OracleBox {
    fn default() -> Self {
        Self {
            half: 6.0,
            n: 192,
            t0: 0.04,
            steps: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    KernelInversion,
    Girsanov,
    Chapman,
    Divergence,
    MomentBound,
}

impl CheckName {
    pub const ALL: [CheckName; 5] = [
        Self::KernelInversion,
        Self::Girsanov,
        Self::Chapman,
        Self::Divergence,
        Self::MomentBound,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::KernelInversion => "kernel-inversion",
            Self::Girsanov => "girsanov",
            Self::Chapman => "chapman",
            Self::Divergence => "divergence",
            Self::MomentBound => "moment-bound",
        }
    }
}

/// Pass/fail thresholds for every check a run can report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed |variance - T^{2H}| in standard errors.
    pub variance_se: f64,
    /// Allowed |E Z - 1| in standard errors.
    pub martingale_se: f64,
    /// Relative error of Brownian Girsanov weights against the closed form.
    pub closed_form: f64,
    /// FD divergence norm over gradient norm.
    pub divergence: f64,
    pub lamb_oseen: f64,
    /// Largest accepted ratio of successive backward sup-differences.
    pub contraction: f64,
    pub residual: f64,
    pub terminal: f64,
    pub oracle: f64,
    pub inversion: f64,
    /// Chapman distance must stay below factor * noise floor + slack.
    pub chapman_factor: f64,
    pub chapman_slack: f64,
    /// Allowed E|X_t|^2 excess over the moment bound in standard errors.
    pub moment_se: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            variance_se: 4.0,
            martingale_se: 3.0,
            closed_form: 1e-12,
            divergence: 0.02,
            lamb_oseen: 0.05,
            contraction: 0.7,
            residual: 0.15,
            terminal: 0.05,
            oracle: 0.10,
            inversion: 1e-2,
            chapman_factor: 2.0,
            chapman_slack: 0.01,
            moment_se: 3.0,
        }
    }
}

/// One run. Everything but `subcommand` is optional in the file; after
/// `resolve` every key the subcommand uses is filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<FbmMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<Interaction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_drift: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<TerminalDatum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antithetic: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckName>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Reads a config file. `.json` files are JSON, anything else TOML. A
/// document with a top-level `config` table (an emitted manifest) is
/// unwrapped, so a run can be repeated from its manifest.
pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut cfg = parse_config(&text, is_json).map_err(|e| e.context(&path.display().to_string()))?;
    if let Some(MeasureSpec { file: Some(f), .. }) = &mut cfg.measure {
        if f.is_relative() {
            if let Some(dir) = path.parent() {
                *f = dir.join(&*f);
            }
        }
    }
    Ok(cfg)
}

pub fn parse_config(text: &str, is_json: bool) -> CliResult<RunConfig> {
    let mut value: serde_json::Value = if is_json {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("JSON: {e}")))?
    } else {
        let table: toml::Table = toml::from_str(text).map_err(|e| CliError::config(format!("TOML: {e}")))?;
        serde_json::to_value(table).map_err(|e| CliError::config(format!("TOML: {e}")))?
    };
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::config("the configuration must be a table of keys"))?;
    let sub: Subcommand = match obj.get("subcommand") {
        Some(s) => serde_json::from_value(s.clone()).map_err(|e| CliError::config(format!("subcommand: {e}")))?,
        None => return Err(CliError::config("subcommand: missing")),
    };
    let stray: Vec<String> = obj
        .keys()
        .filter(|k| !COMMON_KEYS.contains(&k.as_str()) && !sub.keys().contains(&k.as_str()))
        .map(|k| {
            if all_keys().contains(&k.as_str()) {
                format!("{k}: not used by {}", sub.as_str())
            } else {
                format!("{k}: unknown key")
            }
        })
        .collect();
    if !stray.is_empty() {
        return Err(CliError::Config(stray));
    }
    serde_json::from_value(value).map_err(|e| CliError::config(e.to_string()))
}

fn all_keys() -> Vec<&'static str> {
    let subs = [
        Subcommand::FbmSample,
        Subcommand::GirsanovCheck,
        Subcommand::ForwardNs,
        Subcommand::BackwardNs,
        Subcommand::OracleCompare,
        Subcommand::Diagnostics,
    ];
    subs.iter().flat_map(|s| s.keys().iter().copied()).collect()
}

impl RunConfig {
    /// Applies overrides, fills defaults, inlines the measure and checks
    /// every numeric range. All problems are reported at once.
    pub fn resolve(mut self, ov: &Overrides) -> CliResult<RunConfig> {
        use Subcommand::*;
        let sub = self.subcommand;
        if ov.seed.is_some() {
            self.seed = ov.seed;
        }
        if ov.out.is_some() {
            self.out = ov.out.clone();
        }
        if ov.threads.is_some() {
            self.threads = ov.threads;
        }
        self.seed.get_or_insert(0);
        self.out.get_or_insert_with(|| PathBuf::from("flowsde-out"));
        self.tolerances.get_or_insert_with(Tolerances::default);
        let (h, t, n, m) = match sub {
            FbmSample => (Some(0.5), 1.0, 64, 1),
            GirsanovCheck => (Some(0.5), 1.0, 64, 2000),
            ForwardNs => (Some(0.5), 0.5, 200, 20_000),
            BackwardNs => (None, 0.5, 16, 2000),
            OracleCompare => (None, 0.25, 50, 4000),
            Diagnostics => (Some(0.5), 1.0, 256, 2000),
        };
        if let Some(h) = h {
            self.h.get_or_insert(h);
        }
        self.t.get_or_insert(t);
        self.n.get_or_insert(n);
        self.m.get_or_insert(m);
        match sub {
            FbmSample => {
                self.dim.get_or_insert(1);
                self.method.get_or_insert(FbmMethod::ExactCholesky);
            }
            GirsanovCheck => {
                self.constant_drift.get_or_insert([1.0, 0.0]);
                self.x0.get_or_insert([0.0, 0.0]);
            }
            ForwardNs => {
                self.eps.get_or_insert(0.05);
                self.measure.get_or_insert_with(|| inline(vec![[0.0, 0.0, 1.0]]));
                self.grid.get_or_insert(GridConfig { half: 1.5, n: 120 });
                self.interaction.get_or_insert_with(Interaction::default);
                self.method.get_or_insert(FbmMethod::Circulant);
                self.radii.get_or_insert_with(|| vec![0.3, 0.6, 1.0, 1.5]);
                self.angles.get_or_insert(64);
            }
            BackwardNs => {
                self.eps.get_or_insert(0.05);
                self.terminal.get_or_insert(TerminalDatum::Gaussian {
                    amplitude: 0.5,
                    sigma: 1.0,
                    center: [0.0, 0.0],
                });
                self.grid.get_or_insert(GridConfig { half: 3.2, n: 16 });
                self.max_iter.get_or_insert(6);
                self.tol.get_or_insert(1e-10);
                self.antithetic.get_or_insert(true);
            }
            OracleCompare => {
                self.eps.get_or_insert(0.05);
                self.measure.get_or_insert_with(|| MeasureSpec {
                    atoms: None,
                    file: None,
                    blob: Some(BlobSpec {
                        center: [0.0, 0.0],
                        sigma: 0.3,
                        mass: 1.0,
                        nodes: 5,
                    }),
                });
                self.grid.get_or_insert(GridConfig { half: 1.5, n: 48 });
                self.interaction.get_or_insert_with(Interaction::default);
                self.oracle.get_or_insert_with(OracleBox::default);
            }
            Diagnostics => {
                self.drift.get_or_insert(DriftSpec::Zero);
                self.grid.get_or_insert(GridConfig { half: 1.5, n: 120 });
                self.checks.get_or_insert_with(|| CheckName::ALL.to_vec());
            }
        }
        let mut errs = Vec::new();
        if let Some(spec) = self.measure.take() {
            match inline_measure(spec) {
                Ok(s) => self.measure = Some(s),
                Err(CliError::Config(msgs)) => errs.extend(msgs.into_iter().map(|m| format!("measure: {m}"))),
                Err(e) => return Err(e),
            }
        }
        self.validate(&mut errs);
        if errs.is_empty() {
            Ok(self)
        } else {
            Err(CliError::Config(errs))
        }
    }

    fn validate(&self, errs: &mut Vec<String>) {
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                errs.push(msg.to_string());
            }
        };
        if let Some(h) = self.h {
            check(h > 0.0 && h < 1.0, "H: must lie in (0, 1)");
            if self.subcommand == Subcommand::GirsanovCheck {
                check(h <= 0.5, "H: Girsanov weights are implemented for H <= 1/2");
            }
        }
        check(self.t.is_some_and(|t| t > 0.0 && t.is_finite()), "T: must be positive and finite");
        check(self.n.is_some_and(|n| (1..=1 << 20).contains(&n)), "N: must be between 1 and 2^20");
        check(self.m.is_some_and(|m| (1..=1 << 26).contains(&m)), "M: must be between 1 and 2^26");
        if let Some(d) = self.dim {
            check((1..=8).contains(&d), "dim: must be between 1 and 8");
        }
        if let Some(e) = self.eps {
            check(e > 0.0 && e.is_finite(), "eps: must be positive");
        }
        if let Some(g) = &self.grid {
            check(g.half > 0.0 && g.half.is_finite(), "grid.half: must be positive");
            check((3..=4096).contains(&g.n), "grid.n: must be between 3 and 4096");
        }
        if let Some(th) = self.threads {
            check(th >= 1, "threads: must be at least 1");
        }
        if let Some(c) = &self.constant_drift {
            check(c.iter().all(|v| v.is_finite()), "constant_drift: must be finite");
        }
        if let Some(x) = &self.x0 {
            check(x.iter().all(|v| v.is_finite()), "x0: must be finite");
        }
        if let Some(t) = &self.terminal {
            if let Err(e) = t.validate() {
                check(false, &format!("terminal: {e}"));
            }
        }
        if let Some(b) = self.truncation {
            check(b > 0.0, "truncation: must be positive");
        }
        if let Some(k) = self.max_iter {
            check((1..=100).contains(&k), "max_iter: must be between 1 and 100");
        }
        if let Some(tol) = self.tol {
            check(tol >= 0.0, "tol: must be nonnegative");
        }
        if let Some(r) = &self.radii {
            check(!r.is_empty() && r.iter().all(|r| *r > 0.0 && r.is_finite()), "radii: must be positive");
        }
        if let Some(a) = self.angles {
            check(a >= 1, "angles: must be at least 1");
        }
        if let Some(o) = &self.oracle {
            check(o.half > 0.0, "oracle.half: must be positive");
            check((8..=2048).contains(&o.n), "oracle.n: must be between 8 and 2048");
            check(o.steps >= 1, "oracle.steps: must be at least 1");
            check(
                o.t0 > 0.0 && self.t.is_some_and(|t| o.t0 < t),
                "oracle.t0: must lie in (0, T)",
            );
            if let Some(g) = &self.grid {
                check(g.half < o.half, "grid.half: the comparison window must lie inside the oracle box");
            }
        }
        if let Some(d) = &self.drift {
            if let Err(e) = d.validate() {
                check(false, &format!("drift: {e}"));
            }
        }
        if let Some(c) = &self.checks {
            check(!c.is_empty(), "checks: enable at least one check");
        }
        if let Some(tol) = &self.tolerances {
            let v = [
                tol.variance_se,
                tol.martingale_se,
                tol.closed_form,
                tol.divergence,
                tol.lamb_oseen,
                tol.contraction,
                tol.residual,
                tol.terminal,
                tol.oracle,
                tol.inversion,
                tol.chapman_factor,
                tol.chapman_slack,
                tol.moment_se,
            ];
            check(v.iter().all(|x| *x >= 0.0 && x.is_finite()), "tolerances: must be nonnegative and finite");
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_default()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// The resolved measure; only valid after `resolve`.
    pub fn nu0(&self) -> CliResult<(DiscreteSignedMeasure, IngestReport)> {
        let rows = self
            .measure
            .as_ref()
            .and_then(|m| m.atoms.as_ref())
            .ok_or_else(|| CliError::config("measure: missing"))?;
        let (atoms, weights) = rows.iter().map(|r| ([r[0], r[1]], r[2])).unzip();
        let nu = DiscreteSignedMeasure::new(atoms, weights)?;
        let report = IngestReport::of(&nu, rows.len());
        Ok((nu, report))
    }
}

fn inline(rows: Vec<[f64; 3]>) -> MeasureSpec {
    MeasureSpec {
        atoms: Some(rows),
        file: None,
        blob: None,
    }
}

fn inline_measure(spec: MeasureSpec) -> CliResult<MeasureSpec> {
    let given = spec.atoms.is_some() as u8 + spec.file.is_some() as u8 + spec.blob.is_some() as u8;
    if given != 1 {
        return Err(CliError::config("give exactly one of atoms, file, blob"));
    }
    if let Some(rows) = spec.atoms {
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CliError::config("atoms must be finite"));
        }
        return Ok(inline(rows));
    }
    if let Some(path) = spec.file {
        let (_, _, rows) = measure_ingest(&path)?;
        return Ok(inline(rows));
    }
    let b = spec.blob.expect("one variant present");
    if !(b.sigma > 0.0) || !(1..=5).contains(&b.nodes) {
        return Err(CliError::config("blob needs sigma > 0 and 1 to 5 nodes"));
    }
    let nu = DiscreteSignedMeasure::gaussian_blob(b.center, b.sigma, b.mass, b.nodes)?;
    Ok(inline(
        nu.atoms().iter().zip(nu.weights()).map(|(y, w)| [y[0], y[1], *w]).collect(),
    ))
}
