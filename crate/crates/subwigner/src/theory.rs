//! Limiting covariance of joint linear eigenvalue statistics over
//! overlapping principal submatrices.
//!
//! With `beta = gamma_lp / sqrt(gamma_l gamma_p)` and `(phi)_k` the
//! rescaled first-kind Chebyshev coefficients of a test function, the
//! limiting covariance of the centered statistics splits as
//!
//! ```text
//! sigma^2/4 (phi_l)_1 (phi_p)_1 beta  +  1/2 sum_{k>=2} k (phi_l)_k (phi_p)_k beta^k
//!   [+ kappa_4 correction for non-Gaussian entries]
//! ```
//!
//! The same quantity admits a contour form against the log kernel
//! `(1/2pi) ln |(gamma_lp - z w) / (gamma_lp - z conj(w))|`, a Dirichlet
//! Green's function — the limiting fields are correlated Gaussian free
//! fields. The series is the production path (exact for polynomials, one
//! truncation knob); the contour and kernel routes live here as independent
//! cross-checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::chebfn::{self, ChebError, TestFunction, WeightKind};
use crate::ensemble::{EntryLaw, IndexFamilyRealization, OverlapGeometry};

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("invalid overlap geometry: beta = {0} exceeds 1")]
    BetaAboveOne(f64),
    #[error("series route requires beta < 1, got beta = {0}")]
    BetaNotBelowOne(f64),
    #[error("evaluation point ({x}, {y}) outside the open support")]
    OutsideSupport { x: f64, y: f64 },
    #[error("log kernel singular: z * conj(w) coincides with gamma_lp = {0}")]
    LogKernelSingular(f64),
    #[error("non-decaying coefficient tail at beta = 1 (tail {tail:e} vs scale {scale:e}); raise smoothness or K")]
    NonDecayingTail { tail: f64, scale: f64 },
    #[error(transparent)]
    Cheb(#[from] ChebError),
}

/// Numerical knobs for the theory evaluations.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TheoryOptions {
    /// Series truncation for closure test functions (polynomials truncate
    /// at their degree).
    pub truncation_k: usize,
    /// Gauss–Chebyshev nodes for coefficient quadrature.
    pub quad_nodes: usize,
    /// Grid points per axis for the contour cross-check.
    pub contour_grid: usize,
}

impl Default for TheoryOptions {
    fn default() -> Self {
        TheoryOptions {
            truncation_k: 64,
            quad_nodes: 2048,
            contour_grid: 1024,
        }
    }
}

impl TheoryOptions {
    fn order_for(&self, phi: &TestFunction) -> usize {
        phi.degree().unwrap_or(self.truncation_k)
    }

    fn nodes_for(&self, k: usize) -> usize {
        self.quad_nodes.max(4 * k.max(1))
    }
}

/// Covariance split into its three closed-form contributions.
///
/// `gff_part` is the full series `1/2 sum_{k>=1} k beta^k c_k c'_k`
/// (the `k = 1` term at weight 1/2); `sigma_part` is the adjustment
/// `(sigma^2 - 2)/4 c_1 c'_1 beta` that moves the `k = 1` weight to
/// `sigma^2/4`; `kappa4_part` is the fourth-cumulant correction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovarianceBreakdown {
    pub gff_part: f64,
    pub sigma_part: f64,
    pub kappa4_part: f64,
    pub total: f64,
    pub truncation_k: usize,
    pub series_tail: f64,
}

fn check_beta(geom: &OverlapGeometry) -> Result<(), TheoryError> {
    if geom.beta > 1.0 + 1e-12 {
        return Err(TheoryError::BetaAboveOne(geom.beta));
    }
    Ok(())
}

struct SeriesTerms {
    gff: f64,
    sigma_adj_unit: f64, // c_1 c'_1 beta, to be scaled by (sigma^2 - 2)/4
    tail: f64,
    k: usize,
}

fn series_terms(
    phi_l: &TestFunction,
    phi_p: &TestFunction,
    geom: &OverlapGeometry,
    opts: &TheoryOptions,
) -> Result<SeriesTerms, TheoryError> {
    check_beta(geom)?;
    let k = opts.order_for(phi_l).min(opts.order_for(phi_p));
    let nodes = opts.nodes_for(k);
    let cl = chebfn::cheb_coeffs(phi_l, geom.gamma_l, k, nodes)?;
    let cp = chebfn::cheb_coeffs(phi_p, geom.gamma_p, k, nodes)?;
    let mut gff = 0.0;
    let mut beta_pow = 1.0;
    let mut last_terms = [0.0f64; 3];
    for kk in 1..=k {
        beta_pow *= geom.beta;
        let term = 0.5 * kk as f64 * cl.coeffs[kk] * cp.coeffs[kk] * beta_pow;
        gff += term;
        last_terms[kk % 3] = term.abs();
    }
    // Truncation error: exactly zero when either side is a polynomial (the
    // product series terminates at its degree, which caps k); otherwise
    // the magnitude of the trailing retained terms.
    let terminating = phi_l.degree().is_some() || phi_p.degree().is_some();
    let tail = if terminating {
        0.0
    } else {
        last_terms.iter().fold(0.0f64, |m, &t| m.max(t))
    };
    let sigma_adj_unit = if k >= 1 {
        cl.coeffs[1] * cp.coeffs[1] * geom.beta
    } else {
        0.0
    };
    Ok(SeriesTerms {
        gff,
        sigma_adj_unit,
        tail,
        k,
    })
}

/// The Gaussian-entry covariance in series form:
/// `sigma^2/4 c_1 c'_1 beta + 1/2 sum_{k>=2} k c_k c'_k beta^k`.
pub fn cov_gaussian_series(
    phi_l: &TestFunction,
    phi_p: &TestFunction,
    geom: &OverlapGeometry,
    sigma_sq: f64,
    opts: &TheoryOptions,
) -> Result<CovarianceBreakdown, TheoryError> {
    let s = series_terms(phi_l, phi_p, geom, opts)?;
    let sigma_part = (sigma_sq - 2.0) / 4.0 * s.sigma_adj_unit;
    Ok(CovarianceBreakdown {
        gff_part: s.gff,
        sigma_part,
        kappa4_part: 0.0,
        total: s.gff + sigma_part,
        truncation_k: s.k,
        series_tail: s.tail,
    })
}

/// The fourth-cumulant covariance correction,
/// `kappa_4 gamma_lp^2 / (2 pi^2 gamma_l^2 gamma_p^2) * I_l * I_p` with
/// `I = int phi(x) (2 gamma - x^2) / sqrt(4 gamma - x^2) dx`; equivalently
/// `(kappa_4 / 2) gamma_lp^2 B_{phi_l} B_{phi_p}`.
pub fn cov_kappa4(
    phi_l: &TestFunction,
    phi_p: &TestFunction,
    geom: &OverlapGeometry,
    kappa4: f64,
    opts: &TheoryOptions,
) -> f64 {
    if kappa4 == 0.0 || geom.gamma_lp == 0.0 {
        return 0.0;
    }
    let nodes = opts.quad_nodes;
    let il = chebfn::weighted_integral(phi_l, geom.gamma_l, WeightKind::Kappa4, nodes);
    let ip = chebfn::weighted_integral(phi_p, geom.gamma_p, WeightKind::Kappa4, nodes);
    let gl = geom.gamma_l;
    let gp = geom.gamma_p;
    kappa4 * geom.gamma_lp * geom.gamma_lp / (2.0 * PI * PI * gl * gl * gp * gp) * il * ip
}

/// Total limiting covariance for a given entry law: the Gaussian part plus
/// the fourth-cumulant correction.
pub fn cov_total(
    phi_l: &TestFunction,
    phi_p: &TestFunction,
    geom: &OverlapGeometry,
    law: &EntryLaw,
    opts: &TheoryOptions,
) -> Result<CovarianceBreakdown, TheoryError> {
    let mut breakdown = cov_gaussian_series(phi_l, phi_p, geom, law.sigma_sq_diag, opts)?;
    breakdown.kappa4_part = cov_kappa4(phi_l, phi_p, geom, law.kappa4, opts);
    breakdown.total = breakdown.gff_part + breakdown.sigma_part + breakdown.kappa4_part;
    Ok(breakdown)
}

/// The `d x d` covariance matrix with per-entry breakdowns; symmetric by
/// construction (entry `(p, l)` reuses entry `(l, p)` transposed).
pub fn covariance_breakdown_matrix(
    phis: &[TestFunction],
    family: &IndexFamilyRealization,
    law: &EntryLaw,
    opts: &TheoryOptions,
) -> Result<Vec<Vec<CovarianceBreakdown>>, TheoryError> {
    let d = family.d();
    assert_eq!(phis.len(), d, "one test function per index set");
    let mut rows: Vec<Vec<Option<CovarianceBreakdown>>> = vec![vec![None; d]; d];
    for l in 0..d {
        for p in l..d {
            let geom = family.overlap_geometry(l, p);
            let entry = cov_total(&phis[l], &phis[p], &geom, law, opts)?;
            rows[l][p] = Some(entry);
            rows[p][l] = Some(entry);
        }
    }
    Ok(rows
        .into_iter()
        .map(|r| r.into_iter().map(|e| e.expect("filled")).collect())
        .collect())
}

/// Totals of [`covariance_breakdown_matrix`].
pub fn covariance_matrix(
    phis: &[TestFunction],
    family: &IndexFamilyRealization,
    law: &EntryLaw,
    opts: &TheoryOptions,
) -> Result<Vec<Vec<f64>>, TheoryError> {
    Ok(covariance_breakdown_matrix(phis, family, law, opts)?
        .into_iter()
        .map(|row| row.into_iter().map(|e| e.total).collect())
        .collect())
}

/// The limiting bilinear form `<f, g>` in coefficient space: expand `f` and
/// `g` in the second-kind bases at their own scales and sum
/// `f_k g_k sqrt(gamma_l gamma_p) beta^(k+1)`.
pub fn bilinear_form(
    f: &TestFunction,
    g: &TestFunction,
    geom: &OverlapGeometry,
    opts: &TheoryOptions,
) -> Result<f64, TheoryError> {
    check_beta(geom)?;
    let k = opts.order_for(f).min(opts.order_for(g));
    let nodes = opts.nodes_for(k);
    let fk = chebfn::cheb_u_coeffs(f, geom.gamma_l, k, nodes)?;
    let gk = chebfn::cheb_u_coeffs(g, geom.gamma_p, k, nodes)?;
    let root = (geom.gamma_l * geom.gamma_p).sqrt();
    let mut total = 0.0;
    let mut beta_pow = geom.beta;
    let mut tail = 0.0f64;
    for kk in 0..=k {
        let term = fk[kk] * gk[kk] * root * beta_pow;
        total += term;
        beta_pow *= geom.beta;
        if kk + 3 > k {
            tail = tail.max(term.abs());
        }
    }
    let terminating = f.degree().is_some() || g.degree().is_some();
    if geom.beta >= 1.0 - 1e-12 && !terminating {
        let scale = 1e-8 * (1.0 + total.abs());
        if tail > scale {
            return Err(TheoryError::NonDecayingTail { tail, scale });
        }
    }
    Ok(total)
}

/// Closed-form pairing of the second-kind families:
/// `<U_k, U_q> = delta_kq sqrt(gamma_l gamma_p) beta^(k+1)`.
pub fn cheb_u_pairing(k: usize, q: usize, geom: &OverlapGeometry) -> f64 {
    if k != q || geom.gamma_lp == 0.0 {
        return 0.0;
    }
    (geom.gamma_l * geom.gamma_p).sqrt() * geom.beta.powi(k as i32 + 1)
}

/// The covariance kernel
/// `F(x, y) = sum_k U_k(x; gamma_l) U_k(y; gamma_p) sqrt(gamma_l gamma_p) beta^(k+1)`,
/// truncated at `k_max`. Diverges pointwise at `beta = 1`, hence rejected
/// there.
pub fn kernel_f(
    x: f64,
    y: f64,
    geom: &OverlapGeometry,
    k_max: usize,
) -> Result<f64, TheoryError> {
    if geom.gamma_lp == 0.0 {
        return Ok(0.0);
    }
    if geom.beta >= 1.0 {
        return Err(TheoryError::BetaNotBelowOne(geom.beta));
    }
    if !chebfn::in_support(geom.gamma_l, x) || !chebfn::in_support(geom.gamma_p, y) {
        return Err(TheoryError::OutsideSupport { x, y });
    }
    let root = (geom.gamma_l * geom.gamma_p).sqrt();
    let mut total = 0.0;
    let mut beta_pow = geom.beta;
    for k in 0..=k_max {
        total += chebfn::cheb_u(k, geom.gamma_l, x) * chebfn::cheb_u(k, geom.gamma_p, y) * root * beta_pow;
        beta_pow *= geom.beta;
    }
    Ok(total)
}

/// The Gaussian-free-field log kernel
/// `(1/2pi) ln |(gamma_lp - z w) / (gamma_lp - z conj(w))|` for `z`, `w` in
/// the open upper half plane with `|z|^2 = gamma_l`, `|w|^2 = gamma_p`.
pub fn gff_log_kernel(z: Complex64, w: Complex64, gamma_lp: f64) -> Result<f64, TheoryError> {
    if gamma_lp == 0.0 {
        return Ok(0.0);
    }
    let num = Complex64::new(gamma_lp, 0.0) - z * w;
    let den = Complex64::new(gamma_lp, 0.0) - z * w.conj();
    if den.norm_sqr() < 1e-30 {
        return Err(TheoryError::LogKernelSingular(gamma_lp));
    }
    Ok((num.norm_sqr() / den.norm_sqr()).ln() / (4.0 * PI))
}

/// The defining series of the log kernel in angle coordinates,
/// `sum_{k>=1} beta^k / k sin(k theta) sin(k omega)`. The closed form above
/// equals this series divided by pi.
pub fn gff_log_kernel_series(theta: f64, omega: f64, beta: f64, k_max: usize) -> f64 {
    let mut total = 0.0;
    let mut beta_pow = 1.0;
    for k in 1..=k_max {
        beta_pow *= beta;
        total += beta_pow / k as f64 * (k as f64 * theta).sin() * (k as f64 * omega).sin();
    }
    total
}

/// The Gaussian-free-field part of the covariance by tensor-product
/// quadrature of the contour form in angle coordinates:
///
/// ```text
/// (2/pi^2) int int phi_l'(2 sqrt(g_l) cos t) phi_p'(2 sqrt(g_p) cos s)
///          [ (1/2) ln |(g_lp - zw)/(g_lp - z conj w)| ]
///          (2 sqrt(g_l) sin t) (2 sqrt(g_p) sin s) dt ds
/// ```
///
/// Equals `1/2 sum_{k>=1} k beta^k (phi_l)_k (phi_p)_k` for `beta < 1`.
pub fn cov_contour(
    phi_l: &TestFunction,
    phi_p: &TestFunction,
    geom: &OverlapGeometry,
    opts: &TheoryOptions,
) -> Result<f64, TheoryError> {
    if geom.beta >= 1.0 {
        return Err(TheoryError::BetaNotBelowOne(geom.beta));
    }
    if geom.gamma_lp == 0.0 {
        return Ok(0.0);
    }
    let n = opts.contour_grid;
    let h = PI / n as f64;
    let rl = geom.gamma_l.sqrt();
    let rp = geom.gamma_p.sqrt();
    // Per-axis factors phi'(2 sqrt(g) cos t) * 2 sqrt(g) sin t; the sine
    // kills the endpoints so plain uniform weights suffice.
    let axis = |phi: &TestFunction, r: f64| -> Vec<f64> {
        (0..=n)
            .map(|i| {
                let t = i as f64 * h;
                phi.derivative(2.0 * r * t.cos()) * 2.0 * r * t.sin()
            })
            .collect()
    };
    let a = axis(phi_l, rl);
    let b = axis(phi_p, rp);
    let cos_sin: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let t = i as f64 * h;
            (t.cos(), t.sin())
        })
        .collect();
    let mut total = 0.0;
    for i in 0..=n {
        if a[i] == 0.0 {
            continue;
        }
        let z = Complex64::new(rl * cos_sin[i].0, rl * cos_sin[i].1);
        let mut row_sum = 0.0;
        for j in 0..=n {
            if b[j] == 0.0 {
                continue;
            }
            let w = Complex64::new(rp * cos_sin[j].0, rp * cos_sin[j].1);
            let num = Complex64::new(geom.gamma_lp, 0.0) - z * w;
            let den = Complex64::new(geom.gamma_lp, 0.0) - z * w.conj();
            // (1/2) ln |num / den| = (1/4) ln(|num|^2 / |den|^2).
            let s = 0.25 * (num.norm_sqr() / den.norm_sqr()).ln();
            row_sum += b[j] * s;
        }
        total += a[i] * row_sum;
    }
    Ok(2.0 / (PI * PI) * total * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{realize_index_family, EntryLaw, IndexSetSpec};
    use crate::spectra::symmetric_eigenvalues;

    fn opts() -> TheoryOptions {
        TheoryOptions::default()
    }

    fn x() -> TestFunction {
        TestFunction::monomial(1)
    }

    fn x2() -> TestFunction {
        TestFunction::monomial(2)
    }

    fn flagship_geom() -> OverlapGeometry {
        OverlapGeometry::new(0.5, 0.5, 0.25)
    }

    #[test]
    fn trace_covariance_is_sigma_sq_gamma_lp() {
        // Only k = 1 survives for phi = x; the direct oracle is
        // Cov(Tr M(B_l), Tr M(B_p)) = n_lp sigma^2 / n -> sigma^2 gamma_lp.
        for sigma_sq in [1.0, 2.0, 3.5] {
            for (gl, gp, glp) in [(0.5, 0.5, 0.25), (0.7, 0.4, 0.2), (1.0, 1.0, 1.0)] {
                let geom = OverlapGeometry::new(gl, gp, glp);
                let c = cov_gaussian_series(&x(), &x(), &geom, sigma_sq, &opts()).unwrap();
                assert!(
                    (c.total - sigma_sq * glp).abs() < 1e-10,
                    "sigma^2={sigma_sq} geom=({gl},{gp},{glp}): {}",
                    c.total
                );
            }
        }
    }

    #[test]
    fn quadratic_covariance_is_four_gamma_lp_squared() {
        // (x^2)_1 = 0 and (x^2)_2 = 2 gamma: the k = 2 term alone gives
        // 4 gamma_lp^2, independent of sigma^2. Matches the direct oracle
        // over shared off-diagonal entries for Gaussian entries.
        for sigma_sq in [1.0, 2.0] {
            for (gl, gp, glp) in [(0.5, 0.5, 0.25), (0.6, 0.9, 0.5)] {
                let geom = OverlapGeometry::new(gl, gp, glp);
                let c = cov_gaussian_series(&x2(), &x2(), &geom, sigma_sq, &opts()).unwrap();
                assert!((c.total - 4.0 * glp * glp).abs() < 1e-10);
                assert!(c.sigma_part.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_test_function_decouples() {
        let one = TestFunction::polynomial(vec![1.0], "1");
        let c = cov_gaussian_series(&x(), &one, &flagship_geom(), 2.0, &opts()).unwrap();
        assert!(c.total.abs() < 1e-12);
    }

    #[test]
    fn full_wigner_variance_of_x2_is_four() {
        // d = 1, gamma = 1, sigma^2 = 2: the full-matrix specialization.
        let geom = OverlapGeometry::new(1.0, 1.0, 1.0);
        let c = cov_gaussian_series(&x2(), &x2(), &geom, 2.0, &opts()).unwrap();
        assert!((c.total - 4.0).abs() < 1e-10, "{}", c.total);
    }

    #[test]
    fn displayed_forms_of_the_sigma_term_agree() {
        // Breakdown route: gff (weight 1/2 at k = 1) + (sigma^2-2)/4 adj.
        // First displayed form: sigma^2/4 c_1 c'_1 beta + 1/2 sum_{k>=2}.
        // Integral form: (sigma^2-2) gamma_lp / (4 pi^2 g_l g_p) I_l I_p
        // with the odd weight.
        let phi = TestFunction::polynomial(vec![0.0, 1.5, 0.0, -0.3], "cubic");
        let geom = OverlapGeometry::new(0.5, 0.8, 0.3);
        let sigma_sq = 3.0;
        let o = opts();
        let c = cov_gaussian_series(&phi, &phi, &geom, sigma_sq, &o).unwrap();

        let cl = chebfn::cheb_coeffs(&phi, geom.gamma_l, 3, 2048).unwrap();
        let cp = chebfn::cheb_coeffs(&phi, geom.gamma_p, 3, 2048).unwrap();
        let mut direct = sigma_sq / 4.0 * cl.coeffs[1] * cp.coeffs[1] * geom.beta;
        for k in 2..=3 {
            direct += 0.5 * k as f64 * cl.coeffs[k] * cp.coeffs[k] * geom.beta.powi(k as i32);
        }
        assert!((c.total - direct).abs() < 1e-12);

        let il = chebfn::weighted_integral(&phi, geom.gamma_l, WeightKind::Odd, 4096);
        let ip = chebfn::weighted_integral(&phi, geom.gamma_p, WeightKind::Odd, 4096);
        let integral_form = (sigma_sq - 2.0) * geom.gamma_lp
            / (4.0 * PI * PI * geom.gamma_l * geom.gamma_p)
            * il
            * ip;
        assert!(
            (c.sigma_part - integral_form).abs() < 1e-10,
            "{} vs {integral_form}",
            c.sigma_part
        );
    }

    #[test]
    fn kappa4_values() {
        let o = opts();
        for (gl, gp, glp) in [(0.5, 0.5, 0.25), (0.3, 0.9, 0.2)] {
            let geom = OverlapGeometry::new(gl, gp, glp);
            // Each integral is -2 pi gamma^2, so the correction is
            // 2 kappa_4 gamma_lp^2.
            let v = cov_kappa4(&x2(), &x2(), &geom, -2.0, &o);
            assert!((v - 2.0 * (-2.0) * glp * glp).abs() < 1e-10);
        }
        let geom = flagship_geom();
        assert_eq!(cov_kappa4(&x2(), &x2(), &geom, 0.0, &o), 0.0);
        assert!(cov_kappa4(&TestFunction::monomial(3), &x2(), &geom, 1.0, &o).abs() < 1e-10);
    }

    #[test]
    fn total_covariance_per_law() {
        let o = opts();
        let geom = OverlapGeometry::new(0.4, 0.4, 0.4);
        // Rademacher entries make Tr M(B)^2 deterministic: 4 g^2 - 4 g^2 = 0.
        let c = cov_total(&x2(), &x2(), &geom, &EntryLaw::rademacher(1.0), &o).unwrap();
        assert!(c.total.abs() < 1e-10, "{}", c.total);

        // Gaussian law: the kappa_4 part vanishes.
        let geom = flagship_geom();
        let c = cov_total(&x2(), &x2(), &geom, &EntryLaw::gaussian(2.0), &o).unwrap();
        let plain = cov_gaussian_series(&x2(), &x2(), &geom, 2.0, &o).unwrap();
        assert_eq!(c.kappa4_part, 0.0);
        assert!((c.total - plain.total).abs() < 1e-14);

        // Uniform law: 4 glp^2 - (12/5) glp^2 = (8/5) glp^2.
        let glp = 0.25f64;
        let c = cov_total(&x2(), &x2(), &geom, &EntryLaw::uniform(1.0), &o).unwrap();
        assert!((c.total - 1.6 * glp * glp).abs() < 1e-10, "{}", c.total);
    }

    #[test]
    fn breakdown_total_is_exact_sum() {
        let o = opts();
        let geom = OverlapGeometry::new(0.5, 0.7, 0.3);
        let c = cov_total(&x2(), &x2(), &geom, &EntryLaw::uniform(1.5), &o).unwrap();
        assert_eq!(c.total, c.gff_part + c.sigma_part + c.kappa4_part);
    }

    #[test]
    fn covariance_matrix_structure() {
        let o = opts();
        // d = 1 variance.
        let fam = realize_index_family(&[IndexSetSpec::Prefix { gamma: 1.0 }], 64).unwrap();
        let m = covariance_matrix(&[x2()], &fam, &EntryLaw::gaussian(2.0), &o).unwrap();
        assert!((m[0][0] - 4.0).abs() < 1e-10);

        // Disjoint sets: zero off-diagonal.
        let fam = realize_index_family(
            &[
                IndexSetSpec::Window { a: 0.0, b: 0.5 },
                IndexSetSpec::Window { a: 0.5, b: 1.0 },
            ],
            64,
        )
        .unwrap();
        let m = covariance_matrix(&[x(), x()], &fam, &EntryLaw::gaussian(2.0), &o).unwrap();
        assert_eq!(m[0][1], 0.0);
        assert_eq!(m[1][0], 0.0);
    }

    #[test]
    fn covariance_matrices_are_psd() {
        let o = opts();
        let configs: Vec<(Vec<IndexSetSpec>, EntryLaw)> = vec![
            (
                vec![
                    IndexSetSpec::Prefix { gamma: 0.5 },
                    IndexSetSpec::Window { a: 0.25, b: 0.75 },
                    IndexSetSpec::Window { a: 0.1, b: 0.9 },
                ],
                EntryLaw::gaussian(2.0),
            ),
            (
                vec![
                    IndexSetSpec::Prefix { gamma: 0.8 },
                    IndexSetSpec::Stride { modulus: 2, residues: vec![0] },
                ],
                EntryLaw::uniform(1.0),
            ),
            (
                vec![
                    IndexSetSpec::Window { a: 0.0, b: 0.6 },
                    IndexSetSpec::Window { a: 0.3, b: 1.0 },
                    IndexSetSpec::Prefix { gamma: 1.0 },
                ],
                EntryLaw::rademacher(1.0),
            ),
        ];
        let phis = [x(), x2(), TestFunction::polynomial(vec![0.0, 1.0, 0.5], "x + x^2/2")];
        for (specs, law) in configs {
            let d = specs.len();
            let fam = realize_index_family(&specs, 240).unwrap();
            let m = covariance_matrix(&phis[..d], &fam, &law, &o).unwrap();
            let mut flat = crate::matrix::SquareMatrix::zeros(d);
            for i in 0..d {
                for j in 0..d {
                    flat.set(i, j, m[i][j]);
                }
            }
            let eigs = symmetric_eigenvalues(&flat).unwrap();
            assert!(
                eigs.eigenvalues.iter().all(|&e| e >= -1e-10),
                "not PSD: {:?}",
                eigs.eigenvalues
            );
        }
    }

    #[test]
    fn covariance_symmetry_and_bilinearity() {
        let o = opts();
        let geom = OverlapGeometry::new(0.5, 0.8, 0.35);
        let law = EntryLaw::uniform(1.3);
        let phi = TestFunction::polynomial(vec![0.1, -0.4, 2.0, 0.7], "p");
        let psi = TestFunction::polynomial(vec![0.0, 1.0, -1.0], "q");

        let ab = cov_total(&phi, &psi, &geom, &law, &o).unwrap().total;
        let ba = cov_total(&psi, &phi, &geom.transposed(), &law, &o).unwrap().total;
        assert!((ab - ba).abs() < 1e-12);

        // Linearity in the first slot over polynomial combinations.
        let a = 1.7;
        let combo = TestFunction::polynomial(vec![0.0 + a * 0.1, 1.0 + a * -0.4, -1.0 + a * 2.0, a * 0.7], "q + a p");
        let lhs = cov_total(&combo, &psi, &geom, &law, &o).unwrap().total;
        let rhs = a * ab + cov_total(&psi, &psi, &geom, &law, &o).unwrap().total;
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn centering_invariance() {
        let o = opts();
        let geom = OverlapGeometry::new(0.5, 0.5, 0.2);
        let law = EntryLaw::uniform(1.0);
        let phi = TestFunction::polynomial(vec![0.0, 1.0, 1.0], "x + x^2");
        let shifted = TestFunction::polynomial(vec![5.0, 1.0, 1.0], "x + x^2 + 5");
        let a = cov_total(&phi, &phi, &geom, &law, &o).unwrap().total;
        let b = cov_total(&shifted, &shifted, &geom, &law, &o).unwrap().total;
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn gff_part_monotone_in_overlap() {
        // Nonnegative coefficients: each beta^k term grows with gamma_lp.
        let o = opts();
        let phi = TestFunction::polynomial(vec![0.0, 1.0, 0.5, 0.25], "p");
        let mut last = -1.0;
        for i in 0..=10 {
            let glp = 0.05 * i as f64;
            let geom = OverlapGeometry::new(0.5, 0.5, glp);
            let c = cov_gaussian_series(&phi, &phi, &geom, 2.0, &o).unwrap();
            assert!(c.gff_part >= last - 1e-14, "glp={glp}");
            last = c.gff_part;
        }
    }

    #[test]
    fn series_tail_is_negligible_below_beta_one() {
        let o = opts();
        // Smooth closure pair: superexponential coefficient decay makes
        // the trailing terms invisible at K = 64.
        let phi = TestFunction::cos_t(1.0);
        for beta in [0.25, 0.5, 0.9] {
            let geom = OverlapGeometry::new(0.5, 0.5, beta * 0.5);
            let c = cov_gaussian_series(&phi, &phi, &geom, 2.0, &o).unwrap();
            assert!(
                c.series_tail <= 1e-12 * c.total.abs().max(1.0),
                "beta={beta}: tail {}",
                c.series_tail
            );
        }
        // Terminating series report exactly zero truncation error, even
        // against a closure.
        let c = cov_gaussian_series(&x2(), &phi, &flagship_geom(), 2.0, &o).unwrap();
        assert_eq!(c.series_tail, 0.0);
        // At beta = 1 the tail is reported rather than bounded.
        let geom = OverlapGeometry::new(0.5, 0.5, 0.5);
        let c = cov_gaussian_series(&phi, &phi, &geom, 2.0, &o).unwrap();
        assert!(c.series_tail.is_finite());
    }

    #[test]
    fn beta_above_one_rejected() {
        let geom = OverlapGeometry::new(0.25, 0.25, 0.5);
        assert!(matches!(
            cov_gaussian_series(&x(), &x(), &geom, 2.0, &opts()),
            Err(TheoryError::BetaAboveOne(_))
        ));
    }

    #[test]
    fn bilinear_form_against_the_exact_oracle() {
        let o = opts();
        let geom = OverlapGeometry::new(0.5, 0.3, 0.25);
        // <x, x> = gamma_lp^2.
        let v = bilinear_form(&x(), &x(), &geom, &o).unwrap();
        assert!((v - 0.25 * 0.25).abs() < 1e-10);
        // <x^2, 1> = gamma_l * gamma_lp.
        let one = TestFunction::polynomial(vec![1.0], "1");
        let v = bilinear_form(&x2(), &one, &geom, &o).unwrap();
        assert!((v - 0.5 * 0.25).abs() < 1e-10);
        // <x^2, x^2> = gamma_l gamma_p gamma_lp + gamma_lp^3.
        let v = bilinear_form(&x2(), &x2(), &geom, &o).unwrap();
        let expected = 0.5 * 0.3 * 0.25 + 0.25f64.powi(3);
        assert!((v - expected).abs() < 1e-10);
    }

    #[test]
    fn u_pairing_examples() {
        let geom = OverlapGeometry::new(0.5, 0.3, 0.25);
        let root = (0.5f64 * 0.3).sqrt();
        let v = cheb_u_pairing(1, 1, &geom);
        assert!((v - 0.25 * 0.25 / root).abs() < 1e-14);
        assert_eq!(cheb_u_pairing(2, 0, &geom), 0.0);
        let v = cheb_u_pairing(2, 2, &geom);
        assert!((v - 0.25f64.powi(3) / (0.5 * 0.3)).abs() < 1e-14);
    }

    #[test]
    fn bilinear_form_diagonalizes_on_u_polynomials() {
        let o = opts();
        let geom = OverlapGeometry::new(0.5, 0.3, 0.25);
        for k in 0..=12usize {
            for q in 0..=12usize {
                let f = u_as_test_function(k, geom.gamma_l);
                let g = u_as_test_function(q, geom.gamma_p);
                let got = bilinear_form(&f, &g, &geom, &o).unwrap();
                let expected = cheb_u_pairing(k, q, &geom);
                assert!(
                    (got - expected).abs() < 1e-9 * (1.0 + expected.abs()),
                    "k={k} q={q}: {got} vs {expected}"
                );
            }
        }
    }

    fn u_as_test_function(k: usize, gamma: f64) -> TestFunction {
        // Monomial coefficients of U_k at scale gamma, via the recurrence.
        let s = 1.0 / gamma.sqrt();
        let mut prev = vec![1.0];
        if k == 0 {
            return TestFunction::polynomial(prev, "U_0");
        }
        let mut cur = vec![0.0, s];
        for _ in 1..k {
            let mut next = vec![0.0; cur.len() + 1];
            for (i, &c) in cur.iter().enumerate() {
                next[i + 1] += s * c;
            }
            for (i, &c) in prev.iter().enumerate() {
                next[i] -= c;
            }
            prev = cur;
            cur = next;
        }
        TestFunction::polynomial(cur, format!("U_{k}"))
    }

    #[test]
    fn kernel_vanishes_without_overlap_and_rejects_beta_one() {
        let geom = OverlapGeometry::new(0.5, 0.5, 0.0);
        assert_eq!(kernel_f(0.1, 0.2, &geom, 50).unwrap(), 0.0);
        let geom = OverlapGeometry::new(0.5, 0.5, 0.5);
        assert!(matches!(
            kernel_f(0.1, 0.2, &geom, 50),
            Err(TheoryError::BetaNotBelowOne(_))
        ));
    }

    #[test]
    fn kernel_reference_summation() {
        // Truncation at K = 60 against a K = 200 reference at the origin.
        let geom = OverlapGeometry::new(0.5, 0.5, 0.25);
        let short = kernel_f(0.0, 0.0, &geom, 60).unwrap();
        let long = kernel_f(0.0, 0.0, &geom, 200).unwrap();
        assert!((short - long).abs() < 1e-12);
        // Direct alternating-square structure at the origin: only even k
        // survive with U_2j(0) = (-1)^j.
        let mut direct = 0.0;
        for j in 0..=100 {
            let k = 2 * j;
            let term = 0.5 * geom.beta.powi(k as i32 + 1);
            direct += term; // (-1)^j squared
        }
        assert!((long - direct).abs() < 1e-12, "{long} vs {direct}");
    }

    #[test]
    fn bilinear_form_by_kernel_quadrature_matches_coefficient_space() {
        // <f, g> = (4 / pi^2) int int f g F sin^2 t sin^2 s dt ds in angle
        // coordinates; dual-path agreement for polynomials at beta <= 0.9.
        let o = opts();
        for beta in [0.25, 0.5, 0.9] {
            let geom = OverlapGeometry::new(0.5, 0.4, beta * (0.5f64 * 0.4).sqrt());
            for (f, g) in [(x(), x()), (x2(), x2()), (x2(), TestFunction::monomial(4))] {
                let coeff_route = bilinear_form(&f, &g, &geom, &o).unwrap();
                let n = 200;
                let h = PI / n as f64;
                let mut total = 0.0;
                for i in 0..=n {
                    let t = i as f64 * h;
                    let xv = 2.0 * geom.gamma_l.sqrt() * t.cos();
                    let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
                    for j in 0..=n {
                        let s = j as f64 * h;
                        let yv = 2.0 * geom.gamma_p.sqrt() * s.cos();
                        let wj = if j == 0 || j == n { 0.5 } else { 1.0 };
                        let kern = kernel_f(xv, yv, &geom, 80).unwrap();
                        total += wi
                            * wj
                            * f.eval(xv)
                            * g.eval(yv)
                            * kern
                            * (t.sin() * s.sin()).powi(2);
                    }
                }
                let quad_route = 4.0 / (PI * PI) * total * h * h;
                assert!(
                    (coeff_route - quad_route).abs() < 1e-8 * (1.0 + coeff_route.abs()),
                    "beta={beta}: {coeff_route} vs {quad_route}"
                );
            }
        }
    }

    #[test]
    fn log_kernel_examples() {
        // Zero overlap: the ratio is 1.
        let z = Complex64::new(0.1, 0.3);
        let w = Complex64::new(-0.2, 0.4);
        assert_eq!(gff_log_kernel(z, w, 0.0).unwrap(), 0.0);

        // Imaginary axis: z w and z conj(w) are real with opposite signs.
        let (gl, gp, glp) = (0.5f64, 0.4f64, 0.3f64);
        let z = Complex64::new(0.0, gl.sqrt());
        let w = Complex64::new(0.0, gp.sqrt());
        let kernel = gff_log_kernel(z, w, glp).unwrap();
        let beta = glp / (gl * gp).sqrt();
        let series = gff_log_kernel_series(PI / 2.0, PI / 2.0, beta, 10_000);
        assert!((kernel - series / PI).abs() < 1e-10, "{kernel} vs {}", series / PI);
    }

    #[test]
    fn log_kernel_matches_series_and_is_nonnegative_on_grid() {
        for beta in [0.25, 0.5, 0.9] {
            let (gl, gp) = (0.6f64, 0.8f64);
            let glp = beta * (gl * gp).sqrt();
            for i in 1..50 {
                for j in 1..50 {
                    let theta = PI * i as f64 / 50.0;
                    let omega = PI * j as f64 / 50.0;
                    let z = Complex64::from_polar(gl.sqrt(), theta);
                    let w = Complex64::from_polar(gp.sqrt(), omega);
                    let kernel = gff_log_kernel(z, w, glp).unwrap();
                    let series = gff_log_kernel_series(theta, omega, beta, 10_000);
                    assert!(
                        (kernel - series / PI).abs() < 1e-10,
                        "beta={beta} theta={theta} omega={omega}"
                    );
                    assert!(kernel >= -1e-14, "negative kernel at ({theta}, {omega})");
                }
            }
        }
    }

    #[test]
    fn contour_route_examples() {
        let o = opts();
        // phi = x on both sides: 2 gamma_lp.
        for (gl, gp, glp) in [(0.5, 0.5, 0.25), (0.7, 0.3, 0.2)] {
            let geom = OverlapGeometry::new(gl, gp, glp);
            let v = cov_contour(&x(), &x(), &geom, &o).unwrap();
            assert!((v - 2.0 * glp).abs() < 1e-8, "{v}");
        }

        // Constant second argument: derivative vanishes.
        let geom = flagship_geom();
        let one = TestFunction::polynomial(vec![1.0], "1");
        let v = cov_contour(&x(), &one, &geom, &o).unwrap();
        assert!(v.abs() < 1e-12);

        // Cubic pair at beta = 0.5 against the series route.
        let geom = OverlapGeometry::new(0.5, 0.5, 0.25);
        let x3 = TestFunction::monomial(3);
        let contour = cov_contour(&x3, &x3, &geom, &o).unwrap();
        let series = cov_gaussian_series(&x3, &x3, &geom, 2.0, &o).unwrap().gff_part;
        assert!((contour - series).abs() < 1e-6 * (1.0 + series.abs()));
    }
}
