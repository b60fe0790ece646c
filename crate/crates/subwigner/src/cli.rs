//! Batch front end: TOML experiment configs in, JSON/CSV reports out.
//!
//! Config layout (all sections required except the optional knobs shown):
//!
//! ```toml
//! [law]
//! kind = "gaussian"          # gaussian | rademacher | uniform | two_point
//! sigma_sq_diag = 2.0
//! # p = 0.2                  # two_point only
//!
//! [[family]]
//! kind = "prefix"            # prefix | window | stride | explicit
//! gamma = 0.5
//!
//! [[family]]
//! kind = "window"
//! a = 0.25
//! b = 0.75
//!
//! [[functions]]
//! name = "x"                 # x | x2 | x3 | x4 | cos_t | gauss_bump
//!
//! [[functions]]
//! poly = [0.0, 0.0, 1.0]     # monomial-basis coefficients
//!
//! [run]
//! n = 512
//! replicas = 4000
//! master_seed = 42
//! # threads = 0              # 0 = all cores; SUBWIGNER_THREADS overrides
//! # truncation_k = 64
//! # quadrature_nodes = 2048
//! # contour_grid = 1024
//! # z_gate = 4.0
//! # bootstrap = 200
//! # alpha = [1.0, 1.0]
//! ```
//!
//! Every output file embeds the FNV-1a hash of the canonical config so
//! downstream artifacts are traceable to the exact experiment.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chebfn::{self, TestFunction, WeightKind};
use crate::ensemble::{EntryLaw, EntryLawKind, IndexSetSpec, OverlapGeometry};
use crate::freeprob::{self, HKind, RationalGeometry};
use crate::montecarlo::{
    compare_with_theory, decoupling_check, run_experiment, ComparisonReport, ExperimentConfig,
    ExperimentOptions, McError, SimulationResult, SmoothTestFn,
};
use crate::theory::{self, TheoryOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error in {path}:\n{message}")]
    Parse { path: PathBuf, message: String },
    #[error("unsupported test function name {0:?} (known: x, x2, x3, x4, cos_t, gauss_bump)")]
    UnknownFunction(String),
    #[error("invalid law: {0}")]
    Law(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Theory(#[from] crate::theory::TheoryError),
}

// ---------------------------------------------------------------------------
// Config file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    pub law: LawSection,
    pub family: Vec<IndexSetSpec>,
    pub functions: Vec<FunctionSpec>,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawSection {
    pub kind: String,
    pub sigma_sq_diag: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Named {
        name: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        t: Option<f64>,
    },
    Poly {
        poly: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub n: usize,
    pub replicas: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_truncation")]
    pub truncation_k: usize,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    #[serde(default = "default_contour")]
    pub contour_grid: usize,
    #[serde(default = "default_z_gate")]
    pub z_gate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
}

fn default_truncation() -> usize {
    64
}
fn default_nodes() -> usize {
    2048
}
fn default_contour() -> usize {
    1024
}
fn default_z_gate() -> f64 {
    4.0
}

impl ConfigFile {
    pub fn parse(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// FNV-1a over the canonical serialization.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_toml().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    pub fn entry_law(&self) -> Result<EntryLaw, CliError> {
        let kind = match self.law.kind.as_str() {
            "gaussian" => EntryLawKind::Gaussian,
            "rademacher" => EntryLawKind::Rademacher,
            "uniform" => EntryLawKind::Uniform,
            "two_point" => EntryLawKind::TwoPoint {
                p: self
                    .law
                    .p
                    .ok_or_else(|| CliError::Law("two_point needs field p".into()))?,
            },
            other => return Err(CliError::Law(format!("unknown kind {other:?}"))),
        };
        EntryLaw::new(kind, self.law.sigma_sq_diag).map_err(|e| CliError::Law(e.to_string()))
    }

    pub fn test_functions(&self) -> Result<Vec<TestFunction>, CliError> {
        self.functions
            .iter()
            .map(|spec| match spec {
                FunctionSpec::Poly { poly } => {
                    Ok(TestFunction::polynomial(poly.clone(), format!("poly{poly:?}")))
                }
                FunctionSpec::Named { name, t } => match name.as_str() {
                    "x" => Ok(TestFunction::monomial(1)),
                    "x2" => Ok(TestFunction::monomial(2)),
                    "x3" => Ok(TestFunction::monomial(3)),
                    "x4" => Ok(TestFunction::monomial(4)),
                    "cos_t" => Ok(TestFunction::cos_t(t.unwrap_or(1.0))),
                    "gauss_bump" => Ok(TestFunction::gauss_bump()),
                    other => Err(CliError::UnknownFunction(other.into())),
                },
            })
            .collect()
    }

    pub fn theory_options(&self) -> TheoryOptions {
        TheoryOptions {
            truncation_k: self.run.truncation_k,
            quad_nodes: self.run.quadrature_nodes,
            contour_grid: self.run.contour_grid,
        }
    }

    pub fn experiment(
        &self,
        threads_override: Option<usize>,
        seed_override: Option<u64>,
    ) -> Result<ExperimentConfig, CliError> {
        let threads = threads_override
            .or_else(|| {
                std::env::var("SUBWIGNER_THREADS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .unwrap_or(self.run.threads);
        Ok(ExperimentConfig {
            n: self.run.n,
            replicas: self.run.replicas,
            law: self.entry_law()?,
            family: self.family.clone(),
            test_functions: self.test_functions()?,
            master_seed: seed_override.unwrap_or(self.run.master_seed),
            options: ExperimentOptions {
                theory: self.theory_options(),
                threads,
                bootstrap: self.run.bootstrap,
                alpha: self.run.alpha.clone(),
            },
        })
    }
}

// ---------------------------------------------------------------------------
// Manifest and file output
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_hash: String,
    pub master_seed: Option<u64>,
    pub timestamp_unix_secs: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, config_hash: &str, master_seed: Option<u64>) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            master_seed,
            timestamp_unix_secs: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs: Vec::new(),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// RFC 4180 CSV of a row-major matrix. The first column repeats the config
/// hash so every file is self-describing; values carry 17 significant
/// digits.
fn matrix_csv(hash: &str, matrix: &[Vec<f64>]) -> String {
    let d = matrix.first().map_or(0, |r| r.len());
    let mut out = String::from("config_hash,row");
    for j in 0..d {
        out.push_str(&format!(",c{j}"));
    }
    out.push_str("\r\n");
    for (i, row) in matrix.iter().enumerate() {
        out.push_str(&format!("{hash},{i}"));
        for v in row {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push_str("\r\n");
    }
    out
}

// ---------------------------------------------------------------------------
// theory
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct TheoryDocument {
    manifest: RunManifest,
    config: ConfigFile,
    gamma_l: Vec<f64>,
    gamma_lm: Vec<Vec<f64>>,
    total: Vec<Vec<f64>>,
    breakdown: Vec<Vec<theory::CovarianceBreakdown>>,
}

pub fn cmd_theory(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let config = ConfigFile::parse(config_path)?;
    let hash = config.hash();
    let law = config.entry_law()?;
    let phis = config.test_functions()?;
    let family = crate::ensemble::realize_index_family(&config.family, config.run.n)
        .map_err(McError::from)?;
    let opts = config.theory_options();
    let breakdown = theory::covariance_breakdown_matrix(&phis, &family, &law, &opts)?;
    let total: Vec<Vec<f64>> = breakdown
        .iter()
        .map(|row| row.iter().map(|e| e.total).collect())
        .collect();

    let mut manifest = RunManifest::new("theory", &hash, None);
    let json_path = out_dir.join("theory.json");
    let csv_path = out_dir.join("theory_total.csv");
    manifest.outputs = vec![
        json_path.to_string_lossy().into_owned(),
        csv_path.to_string_lossy().into_owned(),
    ];
    let doc = TheoryDocument {
        manifest,
        gamma_l: family.gamma_l.clone(),
        gamma_lm: family.gamma_lm.clone(),
        total: total.clone(),
        breakdown,
        config,
    };
    write_file(&json_path, &serde_json::to_string_pretty(&doc)?)?;
    write_file(&csv_path, &matrix_csv(&hash, &total))?;
    println!("theory: wrote {} and {}", json_path.display(), csv_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct SimulationDocument {
    pub manifest: RunManifest,
    pub config: ConfigFile,
    pub wall_time_secs: f64,
    pub replicas_used: usize,
    pub replicas_failed: usize,
    pub sample_mean: Vec<f64>,
    pub theory: Vec<Vec<f64>>,
    pub simulated: Vec<Vec<f64>>,
    pub cov_stderr: Vec<Vec<f64>>,
    pub bootstrap_stderr: Option<Vec<Vec<f64>>>,
    pub z_scores: Vec<Vec<f64>>,
    pub max_abs_z: f64,
    pub z_gate: f64,
    pub normality: crate::montecarlo::NormalityReport,
}

pub fn cmd_simulate(
    config_path: &Path,
    out_dir: &Path,
    threads: Option<usize>,
    seed: Option<u64>,
) -> Result<bool, CliError> {
    let config = ConfigFile::parse(config_path)?;
    let hash = config.hash();
    let experiment = config.experiment(threads, seed)?;
    let result: SimulationResult = run_experiment(&experiment)?;
    let report: ComparisonReport = compare_with_theory(&result, &experiment)?;

    let mut manifest = RunManifest::new("simulate", &hash, Some(experiment.master_seed));
    let json_path = out_dir.join("simulation.json");
    let files = [
        ("theory.csv", &report.theory),
        ("simulated.csv", &report.simulated),
        ("zscores.csv", &report.z_scores),
    ];
    manifest.outputs.push(json_path.to_string_lossy().into_owned());
    for (name, matrix) in &files {
        let path = out_dir.join(name);
        write_file(&path, &matrix_csv(&hash, matrix))?;
        manifest.outputs.push(path.to_string_lossy().into_owned());
    }

    let gate = config.run.z_gate;
    let doc = SimulationDocument {
        manifest,
        wall_time_secs: result.wall_time.as_secs_f64(),
        replicas_used: result.replicas_used,
        replicas_failed: result.replicas_failed,
        sample_mean: result.sample_mean.clone(),
        theory: report.theory.clone(),
        simulated: report.simulated.clone(),
        cov_stderr: result.cov_stderr.clone(),
        bootstrap_stderr: result.bootstrap_stderr.clone(),
        z_scores: report.z_scores.clone(),
        max_abs_z: report.max_abs_z,
        z_gate: gate,
        normality: report.normality,
        config,
    };
    write_file(&json_path, &serde_json::to_string_pretty(&doc)?)?;

    let pass = report.max_abs_z <= gate;
    println!(
        "simulate: {} replicas in {:.1}s, max |z| = {:.3} (gate {gate}), wrote {}",
        result.replicas_used,
        result.wall_time.as_secs_f64(),
        report.max_abs_z,
        json_path.display()
    );
    Ok(pass)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

pub fn cmd_report(in_dir: &Path) -> Result<(), CliError> {
    let path = in_dir.join("simulation.json");
    let text = fs::read_to_string(&path).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })?;
    let doc: SimulationDocument = serde_json::from_str(&text)?;
    println!("simulation {} (config {})", doc.manifest.timestamp_unix_secs, doc.manifest.config_hash);
    println!(
        "  n = {}, replicas = {} ({} failed), seed = {:?}, wall = {:.1}s",
        doc.config.run.n,
        doc.replicas_used,
        doc.replicas_failed,
        doc.manifest.master_seed,
        doc.wall_time_secs
    );
    let d = doc.theory.len();
    println!("  {:>3} {:>14} {:>14} {:>14} {:>9}", "lp", "theory", "simulated", "stderr", "z");
    for l in 0..d {
        for p in 0..d {
            println!(
                "  {l},{p} {:>14.6e} {:>14.6e} {:>14.6e} {:>9.3}",
                doc.theory[l][p], doc.simulated[l][p], doc.cov_stderr[l][p], doc.z_scores[l][p]
            );
        }
    }
    let nr = &doc.normality;
    println!(
        "  normality: skew {:.4}, excess kurtosis {:.4}, KS {:.4} (1% critical {:.4})",
        nr.skewness, nr.excess_kurtosis, nr.ks_statistic, nr.ks_critical_1pct
    );
    println!(
        "  max |z| = {:.3} against gate {}",
        doc.max_abs_z, doc.z_gate
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct VerifyFamily {
    pub name: String,
    pub pass: bool,
    pub worst_residual: f64,
    pub cases: usize,
}

#[derive(Debug, Serialize)]
pub struct VerifyDocument {
    pub manifest: RunManifest,
    pub families: Vec<VerifyFamily>,
    pub all_pass: bool,
}

pub struct VerifyArgs {
    pub max_degree: usize,
    pub inject_sign_flip: bool,
}

impl Default for VerifyArgs {
    fn default() -> Self {
        VerifyArgs {
            max_degree: 6,
            inject_sign_flip: false,
        }
    }
}

struct FamilyCheck {
    name: &'static str,
    worst: f64,
    cases: usize,
    pass: bool,
}

impl FamilyCheck {
    fn new(name: &'static str) -> Self {
        FamilyCheck {
            name,
            worst: 0.0,
            cases: 0,
            pass: true,
        }
    }

    fn check(&mut self, residual: f64, tolerance: f64) {
        self.cases += 1;
        self.worst = self.worst.max(residual);
        if !(residual <= tolerance) {
            self.pass = false;
        }
    }

    fn check_exact(&mut self, equal: bool) {
        self.cases += 1;
        if !equal {
            self.pass = false;
            self.worst = f64::INFINITY;
        }
    }
}

/// The oracle identity suite: every closed form in the theory path checked
/// against an independent route. Returns the per-family outcomes.
pub fn verify_suite(args: &VerifyArgs) -> Vec<VerifyFamily> {
    let md = args.max_degree;
    let mut families = Vec::new();

    // Alternating factorial sums against their hypergeometric closed forms.
    let mut fam = FamilyCheck::new("h_identities");
    for q in 0..=(5 * md).min(30) {
        for j in 0..=q {
            for kind in [HKind::H1, HKind::H2] {
                let (sum, closed) = freeprob::hyp_h(kind, q, j);
                let closed = if args.inject_sign_flip { -closed } else { closed };
                fam.check_exact(sum == closed);
            }
        }
    }
    families.push(fam);

    // Closed binomial sums against brute-force partition enumeration,
    // exact rational arithmetic, randomized geometries.
    let mut fam = FamilyCheck::new("oracle_equivalence");
    let mut lcg: u64 = 0x5deece66d;
    let mut next_small = |cap: u64| -> i64 {
        lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((lcg >> 33) % cap) as i64
    };
    let max_total = (2 * md + 2).min(14);
    for _ in 0..20 {
        let dl = next_small(9) + 1;
        let dr = next_small(9) + 1;
        let dm = next_small(9) + 1;
        let geom = RationalGeometry::new((1, dl + 1), (1, dr + 1), (1, dl.max(dr).max(dm) + 2));
        for total in (0..=max_total).step_by(2) {
            for k in 0..=total {
                let q = total - k;
                let lhs = freeprob::moment_monomial(k, q, &geom);
                let rhs = freeprob::moment_via_partitions(k, q, &geom).expect("within cap");
                fam.check_exact(lhs == rhs);
            }
        }
    }
    families.push(fam);

    // Diagonalization of the bilinear form by the second-kind families:
    // exact rational route and floating quadrature route.
    let mut fam = FamilyCheck::new("diagonalization_exact");
    let one = BigRational::from_integer(1.into());
    for (num, den) in [(0i64, 1i64), (1, 4), (1, 2), (1, 1)] {
        let gamma_lr = BigRational::new(num.into(), den.into());
        let geom = RationalGeometry {
            gamma_l: one.clone(),
            gamma_r: one.clone(),
            gamma_lr: gamma_lr.clone(),
        };
        for k in 0..=(2 * md).min(10) {
            for q in 0..=(2 * md).min(10) {
                let f = freeprob::u_polynomial_coeffs(k, &one);
                let g = freeprob::u_polynomial_coeffs(q, &one);
                let got = freeprob::moment_polynomial(&f, &g, &geom);
                let expected = freeprob::u_pairing_exact(k, q, &one, &one, &gamma_lr);
                fam.check_exact(got == expected);
            }
        }
    }
    families.push(fam);

    let mut fam = FamilyCheck::new("diagonalization_quadrature");
    // A 400-point contour grid is already spectrally exact at beta <= 0.9;
    // the default 1024 would only slow the suite down.
    let opts = TheoryOptions {
        contour_grid: 400,
        ..TheoryOptions::default()
    };
    for beta in [0.0f64, 0.25, 0.5, 1.0] {
        let geom = OverlapGeometry::new(0.5, 0.4, beta * (0.5f64 * 0.4).sqrt());
        for k in 0..=(2 * md).min(12) {
            for q in 0..=(2 * md).min(12) {
                let f = u_test_function(k, geom.gamma_l);
                let g = u_test_function(q, geom.gamma_p);
                let got = theory::bilinear_form(&f, &g, &geom, &opts).expect("polynomials");
                let expected = theory::cheb_u_pairing(k, q, &geom);
                fam.check((got - expected).abs(), 1e-9 * (1.0 + expected.abs()));
            }
        }
    }
    families.push(fam);

    // Contour route against the coefficient series for polynomial pairs.
    let mut fam = FamilyCheck::new("dual_path_covariance");
    for beta in [0.0f64, 0.25, 0.5, 0.9] {
        let geom = OverlapGeometry::new(0.5, 0.5, beta * 0.5);
        for dl in 0..=md {
            for dp in 0..=md {
                let f = TestFunction::monomial(dl);
                let g = TestFunction::monomial(dp);
                let series = theory::cov_gaussian_series(&f, &g, &geom, 2.0, &opts)
                    .expect("valid geometry")
                    .gff_part;
                let contour = theory::cov_contour(&f, &g, &geom, &opts).expect("beta < 1");
                fam.check((contour - series).abs(), 1e-6 * (1.0 + series.abs()));
            }
        }
    }
    families.push(fam);

    // Log kernel closed form against its defining series on an angle grid.
    let mut fam = FamilyCheck::new("log_kernel");
    for beta in [0.25f64, 0.5, 0.9] {
        let (gl, gp) = (0.6f64, 0.8f64);
        let glp = beta * (gl * gp).sqrt();
        for i in 1..20 {
            for j in 1..20 {
                let theta = std::f64::consts::PI * i as f64 / 20.0;
                let omega = std::f64::consts::PI * j as f64 / 20.0;
                let z = Complex64::from_polar(gl.sqrt(), theta);
                let w = Complex64::from_polar(gp.sqrt(), omega);
                let kernel = theory::gff_log_kernel(z, w, glp).expect("regular point");
                let series = theory::gff_log_kernel_series(theta, omega, beta, 10_000)
                    / std::f64::consts::PI;
                fam.check((kernel - series).abs(), 1e-10);
            }
        }
    }
    families.push(fam);

    // Chebyshev infrastructure: recurrence vs binomial sum, derivative
    // identity, second-kind orthonormality, coefficient exactness.
    let mut fam = FamilyCheck::new("chebyshev_identities");
    for k in 0..=40usize {
        for gamma in [0.25f64, 1.0] {
            for i in 1..10 {
                let x = 2.0 * gamma.sqrt() * (-0.95 + 1.9 * i as f64 / 10.0);
                let a = chebfn::cheb_u(k, gamma, x);
                let b = chebfn::cheb_u_binomial(k, gamma, x);
                fam.check((a - b).abs(), 1e-10 * (1.0 + a.abs()));
            }
        }
    }
    for k in 1..=8usize {
        let gamma = 0.7f64;
        for i in 1..10 {
            let x = 2.0 * gamma.sqrt() * (-0.9 + 1.8 * i as f64 / 10.0);
            let h = 1e-6;
            let fd = (chebfn::cheb_t(k, gamma, x + h) - chebfn::cheb_t(k, gamma, x - h)) / (2.0 * h);
            let analytic = k as f64 / (2.0 * gamma.sqrt()) * chebfn::cheb_u(k - 1, gamma, x);
            fam.check((fd - analytic).abs(), 1e-6 * (1.0 + analytic.abs()));
        }
    }
    for k in 0..=8usize {
        for q in 0..=8usize {
            let gamma = 0.5f64;
            let phi = TestFunction::from_fn("uu", move |x| {
                chebfn::cheb_u(k, gamma, x) * chebfn::cheb_u(q, gamma, x)
            });
            let val = chebfn::weighted_integral(&phi, gamma, WeightKind::Semicircle, 4096);
            let expected = if k == q { 1.0 } else { 0.0 };
            fam.check((val - expected).abs(), 1e-9);
        }
    }
    families.push(fam);

    // Cumulant expansion: Rademacher within the explicit envelope and the
    // Gaussian integration-by-parts identity.
    let mut fam = FamilyCheck::new("decoupling");
    let report = decoupling_check(&EntryLaw::rademacher(1.0), &SmoothTestFn::Sin, 3, 1_000_000, 17);
    fam.check(report.residual.abs(), report.bound);
    let report = decoupling_check(&EntryLaw::gaussian(1.0), &SmoothTestFn::Sin, 1, 1_000_000, 18);
    let (lhs, rhs, se) = report.gaussian_identity.expect("gaussian law");
    fam.check((lhs - rhs).abs(), 5.0 * se);
    families.push(fam);

    families
        .into_iter()
        .map(|f| VerifyFamily {
            name: f.name.to_string(),
            pass: f.pass,
            worst_residual: f.worst,
            cases: f.cases,
        })
        .collect()
}

fn u_test_function(k: usize, gamma: f64) -> TestFunction {
    let s = gamma.sqrt();
    let mut prev = vec![1.0f64];
    if k == 0 {
        return TestFunction::polynomial(prev, "U_0");
    }
    let mut cur = vec![0.0, 1.0 / s];
    for _ in 1..k {
        let mut next = vec![0.0; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += c / s;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = cur;
        cur = next;
    }
    TestFunction::polynomial(cur, format!("U_{k}"))
}

pub fn cmd_verify(args: &VerifyArgs, out_dir: Option<&Path>) -> Result<bool, CliError> {
    let families = verify_suite(args);
    let mut all_pass = true;
    for f in &families {
        let status = if f.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} {:<28} cases {:>5}  worst residual {:?}",
            f.name, f.cases, f.worst_residual
        );
        all_pass &= f.pass;
    }
    if let Some(dir) = out_dir {
        let manifest = RunManifest::new("verify", "-", None);
        let doc = VerifyDocument {
            manifest,
            all_pass,
            families,
        };
        let path = dir.join("verify.json");
        write_file(&path, &serde_json::to_string_pretty(&doc)?)?;
        println!("verify: wrote {}", path.display());
    }
    Ok(all_pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[law]
kind = "gaussian"
sigma_sq_diag = 2.0

[[family]]
kind = "prefix"
gamma = 0.5

[[family]]
kind = "window"
a = 0.25
b = 0.75

[[functions]]
name = "x"

[[functions]]
poly = [0.0, 0.0, 1.0]

[run]
n = 64
replicas = 16
master_seed = 7
"#;

    #[test]
    fn config_round_trip_is_idempotent() {
        let parsed: ConfigFile = toml::from_str(EXAMPLE).unwrap();
        let serialized = parsed.to_toml();
        let reparsed: ConfigFile = toml::from_str(&serialized).unwrap();
        assert_eq!(parsed, reparsed);
        assert_eq!(parsed.hash(), reparsed.hash());
    }

    #[test]
    fn function_specs_resolve() {
        let parsed: ConfigFile = toml::from_str(EXAMPLE).unwrap();
        let phis = parsed.test_functions().unwrap();
        assert_eq!(phis.len(), 2);
        assert!((phis[0].eval(1.5) - 1.5).abs() < 1e-15);
        assert!((phis[1].eval(1.5) - 2.25).abs() < 1e-15);

        let bad = r#"
[law]
kind = "gaussian"
sigma_sq_diag = 1.0

[[family]]
kind = "prefix"
gamma = 1.0

[[functions]]
name = "sinh"

[run]
n = 32
replicas = 4
master_seed = 0
"#;
        let parsed: ConfigFile = toml::from_str(bad).unwrap();
        assert!(matches!(
            parsed.test_functions(),
            Err(CliError::UnknownFunction(_))
        ));
    }

    #[test]
    fn csv_embeds_hash_per_row() {
        let csv = matrix_csv("deadbeef", &[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let lines: Vec<&str> = csv.trim_end().split("\r\n").collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "config_hash,row,c0,c1");
        assert!(lines[1].starts_with("deadbeef,0,"));
        assert!(lines[2].starts_with("deadbeef,1,"));
    }

    #[test]
    fn verify_suite_passes_and_mutant_fails() {
        let families = verify_suite(&VerifyArgs {
            max_degree: 2,
            inject_sign_flip: false,
        });
        assert!(families.iter().all(|f| f.pass), "{families:?}");

        let families = verify_suite(&VerifyArgs {
            max_degree: 2,
            inject_sign_flip: true,
        });
        let h = families.iter().find(|f| f.name == "h_identities").unwrap();
        assert!(!h.pass, "sign-flip mutant must be caught");
    }
}
