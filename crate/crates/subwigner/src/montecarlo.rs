//! Replicated finite-order experiments against the limiting theory.
//!
//! Replicas are independent tasks: replica `r` samples one Wigner matrix
//! from the stream keyed by `(master_seed, r)`, extracts each principal
//! submatrix, and evaluates the statistics vector. Execution may fan out
//! over a thread pool but aggregation always runs in replica-index order,
//! so results are bit-identical across thread budgets.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chebfn::TestFunction;
use crate::ensemble::{
    realize_index_family, sample_wigner, EnsembleError, EntryLaw, EntryLawKind,
    IndexFamilyRealization, IndexSetSpec,
};
use crate::spectra::{statistics_vector, SpectraError, StatisticVector};
use crate::theory::{covariance_matrix, TheoryError, TheoryOptions};

#[derive(Debug, Error)]
pub enum McError {
    #[error("config invalid: {0}")]
    InvalidConfig(String),
    #[error("{failed} of {total} replicas failed the eigensolve ({percent:.2}% > 1% abort threshold)")]
    TooManyFailures {
        failed: usize,
        total: usize,
        percent: f64,
    },
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

/// Numerical and execution knobs for an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOptions {
    pub theory: TheoryOptions,
    /// Worker threads; 0 picks the rayon default.
    pub threads: usize,
    /// Optional bootstrap resamples for auditing the delta-method errors.
    pub bootstrap: Option<usize>,
    /// Coefficients of the linear combination used for normality
    /// diagnostics; defaults to all ones.
    pub alpha: Option<Vec<f64>>,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            theory: TheoryOptions::default(),
            threads: 0,
            bootstrap: None,
            alpha: None,
        }
    }
}

/// A complete experiment description; immutable once built.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n: usize,
    pub replicas: usize,
    pub law: EntryLaw,
    pub family: Vec<IndexSetSpec>,
    pub test_functions: Vec<TestFunction>,
    pub master_seed: u64,
    pub options: ExperimentOptions,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.replicas < 2 {
            return Err(McError::InvalidConfig("need at least 2 replicas".into()));
        }
        if self.n < 8 {
            return Err(McError::InvalidConfig("matrix order must be >= 8".into()));
        }
        if self.family.len() != self.test_functions.len() {
            return Err(McError::InvalidConfig(format!(
                "{} index sets but {} test functions",
                self.family.len(),
                self.test_functions.len()
            )));
        }
        if self.family.is_empty() {
            return Err(McError::InvalidConfig("empty family".into()));
        }
        Ok(())
    }

    pub fn realize_family(&self) -> Result<IndexFamilyRealization, McError> {
        Ok(realize_index_family(&self.family, self.n)?)
    }
}

/// Aggregated simulation output.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationResult {
    pub sample_mean: Vec<f64>,
    /// Unbiased covariance estimate centered at the sample mean.
    pub sample_cov: Vec<Vec<f64>>,
    /// Delta-method standard errors of the covariance entries.
    pub cov_stderr: Vec<Vec<f64>>,
    /// Bootstrap standard errors when requested.
    pub bootstrap_stderr: Option<Vec<Vec<f64>>>,
    /// Per-replica statistics standardized coordinate-wise; retained for
    /// diagnostics.
    pub standardized_samples: Vec<Vec<f64>>,
    pub replicas_used: usize,
    pub replicas_failed: usize,
    pub wall_time: Duration,
}

/// Normality diagnostics of the standardized linear combination
/// `sum_l alpha_l (N_l - mean_l)`.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
pub struct NormalityReport {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_statistic: f64,
    /// Asymptotic 1% critical value `1.63 / sqrt(R)`.
    pub ks_critical_1pct: f64,
}

/// Simulation against theory, entry by entry.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub theory: Vec<Vec<f64>>,
    pub simulated: Vec<Vec<f64>>,
    /// `(simulated - theory) / stderr` where the standard error is
    /// positive; `NaN` marks entries with zero standard error.
    pub z_scores: Vec<Vec<f64>>,
    pub normality: NormalityReport,
    pub max_abs_z: f64,
}

/// Computes one replica's statistics vector; pure in
/// `(config, replica_index)`.
pub fn run_replica(
    config: &ExperimentConfig,
    family: &IndexFamilyRealization,
    replica_index: u64,
) -> Result<StatisticVector, SpectraError> {
    let sample = sample_wigner(config.n, &config.law, config.master_seed, replica_index)
        .expect("order validated");
    statistics_vector(&sample, family, &config.test_functions, replica_index)
}

/// Runs every replica (possibly concurrently), excludes and counts failed
/// eigensolves, and aggregates in replica order. More than 1% failures
/// aborts.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SimulationResult, McError> {
    config.validate()?;
    let family = config.realize_family()?;
    let start = Instant::now();
    let run = || -> Vec<Result<StatisticVector, SpectraError>> {
        (0..config.replicas as u64)
            .into_par_iter()
            .map(|r| run_replica(config, &family, r))
            .collect()
    };
    let raw = if config.options.threads == 0 {
        run()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.options.threads)
            .build()
            .map_err(|e| McError::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(run)
    };
    let mut result = aggregate(raw, config)?;
    result.wall_time = start.elapsed();
    Ok(result)
}

/// Reduction over per-replica outcomes, separated from the parallel stage
/// so the failure policy is directly testable.
fn aggregate(
    raw: Vec<Result<StatisticVector, SpectraError>>,
    config: &ExperimentConfig,
) -> Result<SimulationResult, McError> {
    let total = raw.len();
    let d = config.test_functions.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut failed = 0usize;
    for outcome in raw {
        match outcome {
            Ok(v) => rows.push(v.values),
            Err(_) => failed += 1,
        }
    }
    let percent = 100.0 * failed as f64 / total.max(1) as f64;
    if percent > 1.0 {
        return Err(McError::TooManyFailures {
            failed,
            total,
            percent,
        });
    }
    let r = rows.len();
    let rf = r as f64;
    let mut mean = vec![0.0; d];
    for row in &rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= rf;
    }

    // Unbiased covariance and the centered fourth cross-moments feeding the
    // delta-method errors: Var(c_lp) ~ (m22_lp - c_lp^2) / R.
    let mut cov = vec![vec![0.0; d]; d];
    let mut m22 = vec![vec![0.0; d]; d];
    for row in &rows {
        for l in 0..d {
            let dl = row[l] - mean[l];
            for p in 0..d {
                let dp = row[p] - mean[p];
                cov[l][p] += dl * dp;
                m22[l][p] += dl * dl * dp * dp;
            }
        }
    }
    for l in 0..d {
        for p in 0..d {
            cov[l][p] /= rf - 1.0;
            m22[l][p] /= rf;
        }
    }
    let mut stderr = vec![vec![0.0; d]; d];
    for l in 0..d {
        for p in 0..d {
            let var = (m22[l][p] - cov[l][p] * cov[l][p]).max(0.0);
            stderr[l][p] = (var / rf).sqrt();
        }
    }

    let bootstrap_stderr = config
        .options
        .bootstrap
        .map(|b| bootstrap_cov_stderr(&rows, b, config.master_seed));

    let sd: Vec<f64> = (0..d).map(|l| cov[l][l].max(0.0).sqrt()).collect();
    let standardized_samples: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            (0..d)
                .map(|l| {
                    if sd[l] > 0.0 {
                        (row[l] - mean[l]) / sd[l]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    Ok(SimulationResult {
        sample_mean: mean,
        sample_cov: cov,
        cov_stderr: stderr,
        bootstrap_stderr,
        standardized_samples,
        replicas_used: r,
        replicas_failed: failed,
        wall_time: Duration::ZERO,
    })
}

fn bootstrap_cov_stderr(rows: &[Vec<f64>], resamples: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::Rng;
    use rand::SeedableRng;
    let d = rows[0].len();
    let r = rows.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x626f_6f74);
    let mut sums = vec![vec![0.0; d]; d];
    let mut sq_sums = vec![vec![0.0; d]; d];
    for _ in 0..resamples {
        let picks: Vec<usize> = (0..r).map(|_| rng.random_range(0..r)).collect();
        let mut mean = vec![0.0; d];
        for &i in &picks {
            for l in 0..d {
                mean[l] += rows[i][l];
            }
        }
        for m in &mut mean {
            *m /= r as f64;
        }
        for l in 0..d {
            for p in 0..d {
                let c: f64 = picks
                    .iter()
                    .map(|&i| (rows[i][l] - mean[l]) * (rows[i][p] - mean[p]))
                    .sum::<f64>()
                    / (r as f64 - 1.0);
                sums[l][p] += c;
                sq_sums[l][p] += c * c;
            }
        }
    }
    let bf = resamples as f64;
    (0..d)
        .map(|l| {
            (0..d)
                .map(|p| {
                    let mean = sums[l][p] / bf;
                    ((sq_sums[l][p] / bf - mean * mean).max(0.0)).sqrt()
                })
                .collect()
        })
        .collect()
}

/// Standard normal CDF via the Abramowitz–Stegun rational approximation
/// (7.1.26); absolute error below 1.5e-7, far inside every tolerance used
/// on it.
pub fn normal_cdf(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.3275911 * x.abs() / std::f64::consts::SQRT_2);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-x * x / 2.0).exp();
    if x >= 0.0 {
        0.5 * (1.0 + erf)
    } else {
        0.5 * (1.0 - erf)
    }
}

/// Skewness, excess kurtosis, and the Kolmogorov–Smirnov distance to the
/// standard normal for a standardized sample.
pub fn normality_diagnostics(standardized: &[f64]) -> NormalityReport {
    let r = standardized.len().max(1) as f64;
    let mean = standardized.iter().sum::<f64>() / r;
    let m2 = standardized.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r;
    let m3 = standardized.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / r;
    let m4 = standardized.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / r;
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    let excess_kurtosis = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 };

    let mut sorted = standardized.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut ks = 0.0f64;
    for (i, &z) in sorted.iter().enumerate() {
        let cdf = normal_cdf(z);
        let hi = (i as f64 + 1.0) / r - cdf;
        let lo = cdf - i as f64 / r;
        ks = ks.max(hi).max(lo);
    }
    NormalityReport {
        skewness,
        excess_kurtosis,
        ks_statistic: ks,
        ks_critical_1pct: 1.63 / r.sqrt(),
    }
}

/// Compares a simulation to the limiting theory: entrywise z-scores plus
/// normality diagnostics of the alpha-combined scalar (all-ones by
/// default).
pub fn compare_with_theory(
    result: &SimulationResult,
    config: &ExperimentConfig,
) -> Result<ComparisonReport, McError> {
    let family = config.realize_family()?;
    let theory = covariance_matrix(
        &config.test_functions,
        &family,
        &config.law,
        &config.options.theory,
    )?;
    let d = theory.len();
    let mut z = vec![vec![0.0; d]; d];
    let mut max_abs_z = 0.0f64;
    for l in 0..d {
        for p in 0..d {
            let se = result.cov_stderr[l][p];
            z[l][p] = if se > 0.0 {
                (result.sample_cov[l][p] - theory[l][p]) / se
            } else {
                f64::NAN
            };
            if z[l][p].is_finite() {
                max_abs_z = max_abs_z.max(z[l][p].abs());
            }
        }
    }

    let alpha = config
        .options
        .alpha
        .clone()
        .unwrap_or_else(|| vec![1.0; d]);
    // The combination is of the raw centered statistics; the retained
    // samples are coordinate-standardized, so scale back by each sd.
    let sd: Vec<f64> = (0..d).map(|l| result.sample_cov[l][l].max(0.0).sqrt()).collect();
    let combined: Vec<f64> = result
        .standardized_samples
        .iter()
        .map(|row| {
            row.iter()
                .zip(&alpha)
                .zip(&sd)
                .map(|((x, a), s)| a * x * s)
                .sum::<f64>()
        })
        .collect();
    let mean = combined.iter().sum::<f64>() / combined.len().max(1) as f64;
    let var = combined.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
        / (combined.len().max(2) - 1) as f64;
    let sd = var.sqrt();
    let standardized: Vec<f64> = if sd > 0.0 {
        combined.iter().map(|x| (x - mean) / sd).collect()
    } else {
        combined
    };
    let normality = normality_diagnostics(&standardized);

    Ok(ComparisonReport {
        theory,
        simulated: result.sample_cov.clone(),
        z_scores: z,
        normality,
        max_abs_z,
    })
}

/// A smooth function with analytic derivatives of every order used by the
/// cumulant-expansion check.
#[derive(Debug, Clone)]
pub enum SmoothTestFn {
    Sin,
    /// Polynomial in the monomial basis.
    Polynomial(Vec<f64>),
}

impl SmoothTestFn {
    /// `d^order/dx^order` at `x` (order 0 is the function itself).
    pub fn derivative(&self, order: usize, x: f64) -> f64 {
        match self {
            SmoothTestFn::Sin => match order % 4 {
                0 => x.sin(),
                1 => x.cos(),
                2 => -x.sin(),
                _ => -x.cos(),
            },
            SmoothTestFn::Polynomial(coeffs) => {
                let mut c = coeffs.clone();
                for _ in 0..order {
                    c = c
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(i, &ci)| i as f64 * ci)
                        .collect();
                }
                c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
            }
        }
    }

    /// A bound on `sup_x |d^order f|`, available when the derivative is
    /// globally bounded.
    pub fn sup_derivative(&self, order: usize) -> Option<f64> {
        match self {
            SmoothTestFn::Sin => Some(1.0),
            SmoothTestFn::Polynomial(coeffs) => {
                let degree = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
                if order > degree {
                    Some(0.0)
                } else {
                    None
                }
            }
        }
    }
}

/// Outcome of the cumulant-expansion self-check.
#[derive(Debug, Clone, Serialize)]
pub struct DecouplingReport {
    /// Monte Carlo estimate of `E[xi f(xi)]` and its standard error.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// The cumulant sum `sum_{l<=p} kappa_{l+1}/l! E[f^(l)(xi)]` and the
    /// combined standard error of its Monte Carlo terms.
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub residual: f64,
    /// `C_p E|xi|^{p+2} sup|f^(p+1)|` with `C_p <= (1 + (3+2p)^(p+2)) / (p+1)!`.
    pub envelope: f64,
    /// Residual bound actually enforced: envelope + 6 combined stderr.
    pub bound: f64,
    pub within_bound: bool,
    /// For Gaussian laws, the two sides of `E[xi f(xi)] = E[xi^2] E[f'(xi)]`
    /// with the combined standard error.
    pub gaussian_identity: Option<(f64, f64, f64)>,
}

/// Monte Carlo check of the cumulant expansion
/// `E[xi f(xi)] = sum_{l=0}^{p} kappa_{l+1}/l! E[f^(l)(xi)] + eps_p` for a
/// scalar `xi` drawn from the law's off-diagonal distribution, with the
/// explicit remainder envelope.
pub fn decoupling_check(
    law: &EntryLaw,
    f: &SmoothTestFn,
    p: usize,
    sample_count: usize,
    seed: u64,
) -> DecouplingReport {
    use rand::SeedableRng;
    assert!(p + 1 <= 4, "cumulants are tracked through order 4, so p <= 3");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let nf = sample_count as f64;

    // One pass accumulates every moment needed: xi f(xi), each f^(l)(xi),
    // and |xi|^(p+2).
    let mut lhs_sum = 0.0;
    let mut lhs_sq = 0.0;
    let mut deriv_sum = vec![0.0; p + 1];
    let mut deriv_sq = vec![0.0; p + 1];
    let mut abs_moment = 0.0;
    let mut d1_sum = 0.0;
    let mut d1_sq = 0.0;
    for _ in 0..sample_count {
        let xi = law.sample_unit(&mut rng);
        let v = xi * f.derivative(0, xi);
        lhs_sum += v;
        lhs_sq += v * v;
        for (l, (s, q)) in deriv_sum.iter_mut().zip(deriv_sq.iter_mut()).enumerate() {
            let dv = f.derivative(l, xi);
            *s += dv;
            *q += dv * dv;
        }
        abs_moment += xi.abs().powi(p as i32 + 2);
        let d1 = f.derivative(1, xi);
        d1_sum += d1;
        d1_sq += d1 * d1;
    }
    let lhs = lhs_sum / nf;
    let lhs_stderr = ((lhs_sq / nf - lhs * lhs).max(0.0) / nf).sqrt();

    let mut rhs = 0.0;
    let mut rhs_var = 0.0;
    let mut factorial = 1.0;
    for l in 0..=p {
        if l > 0 {
            factorial *= l as f64;
        }
        let kappa = law.off_diagonal_cumulant(l + 1);
        let mean = deriv_sum[l] / nf;
        let var = (deriv_sq[l] / nf - mean * mean).max(0.0) / nf;
        rhs += kappa / factorial * mean;
        rhs_var += (kappa / factorial).powi(2) * var;
    }
    let rhs_stderr = rhs_var.sqrt();

    let cp = (1.0 + (3.0 + 2.0 * p as f64).powi(p as i32 + 2))
        / (1..=(p + 1)).map(|i| i as f64).product::<f64>();
    let sup = f
        .sup_derivative(p + 1)
        .expect("decoupling check needs a bounded derivative of order p + 1");
    let envelope = cp * (abs_moment / nf) * sup;
    let combined_stderr = (lhs_stderr * lhs_stderr + rhs_stderr * rhs_stderr).sqrt();
    let residual = lhs - rhs;
    let bound = envelope + 6.0 * combined_stderr;

    let gaussian_identity = if law.kind == EntryLawKind::Gaussian {
        let d1_mean = d1_sum / nf;
        let d1_se = ((d1_sq / nf - d1_mean * d1_mean).max(0.0) / nf).sqrt();
        // E[xi^2] = 1 for the unit-variance off-diagonal law.
        Some((lhs, d1_mean, (lhs_stderr * lhs_stderr + d1_se * d1_se).sqrt()))
    } else {
        None
    };

    DecouplingReport {
        lhs,
        lhs_stderr,
        rhs,
        rhs_stderr,
        residual,
        envelope,
        bound,
        within_bound: residual.abs() <= bound,
        gaussian_identity,
    }
}
