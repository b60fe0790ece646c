//! Rescaled Chebyshev polynomials on `[-2 sqrt(gamma), 2 sqrt(gamma)]`,
//! coefficient expansions of test functions, and semicircle-weighted
//! integrals.
//!
//! Conventions. With `x = 2 sqrt(gamma) cos(theta)`:
//!
//! ```text
//! T_k(x; gamma) = cos(k theta)
//! U_k(x; gamma) = sin((k+1) theta) / sin(theta)
//! ```
//!
//! The `U_k` are orthonormal under the semicircle weight
//! `sqrt(4 gamma - x^2) / (2 pi gamma)`. Coefficients of a test function in
//! the `T` basis are computed by Gauss–Chebyshev quadrature; the `k = 0`
//! coefficient carries the factor `1/pi` instead of `2/pi` so that the
//! reconstruction `phi = sum_k (phi)_k T_k` holds. The constant coefficient
//! never enters a covariance formula (those sums start at `k = 1`).

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChebError {
    #[error("gamma must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("truncation order {k} needs at least {} quadrature nodes, got {nodes}", 4 * k)]
    InsufficientNodes { k: usize, nodes: usize },
    #[error("test function evaluated to a non-finite value at x = {0}")]
    NonFiniteValue(f64),
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real test function: either a polynomial in the monomial basis or a
/// closure with an optional analytic derivative.
#[derive(Clone)]
pub enum TestFunctionForm {
    /// Coefficients `c_0 + c_1 x + c_2 x^2 + ...`.
    Polynomial(Vec<f64>),
    Closure { f: RealFn, df: Option<RealFn> },
}

#[derive(Clone)]
pub struct TestFunction {
    pub form: TestFunctionForm,
    pub label: String,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.form {
            TestFunctionForm::Polynomial(c) => write!(f, "TestFunction[{} = poly{c:?}]", self.label),
            TestFunctionForm::Closure { df, .. } => write!(
                f,
                "TestFunction[{}, closure{}]",
                self.label,
                if df.is_some() { " + derivative" } else { "" }
            ),
        }
    }
}

impl TestFunction {
    pub fn polynomial(coeffs: Vec<f64>, label: impl Into<String>) -> Self {
        TestFunction {
            form: TestFunctionForm::Polynomial(coeffs),
            label: label.into(),
        }
    }

    pub fn from_fn(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TestFunction {
            form: TestFunctionForm::Closure {
                f: Arc::new(f),
                df: None,
            },
            label: label.into(),
        }
    }

    pub fn from_fn_with_derivative(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            form: TestFunctionForm::Closure {
                f: Arc::new(f),
                df: Some(Arc::new(df)),
            },
            label: label.into(),
        }
    }

    /// Monomial `x^p`.
    pub fn monomial(p: usize) -> Self {
        let mut coeffs = vec![0.0; p + 1];
        coeffs[p] = 1.0;
        TestFunction::polynomial(coeffs, format!("x^{p}"))
    }

    /// `cos(t x)` with analytic derivative.
    pub fn cos_t(t: f64) -> Self {
        TestFunction::from_fn_with_derivative(
            format!("cos({t}x)"),
            move |x| (t * x).cos(),
            move |x| -t * (t * x).sin(),
        )
    }

    /// `exp(-x^2)` with analytic derivative.
    pub fn gauss_bump() -> Self {
        TestFunction::from_fn_with_derivative(
            "exp(-x^2)",
            |x| (-x * x).exp(),
            |x| -2.0 * x * (-x * x).exp(),
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.form {
            TestFunctionForm::Polynomial(c) => horner(c, x),
            TestFunctionForm::Closure { f, .. } => f(x),
        }
    }

    /// Derivative: analytic for polynomials and closures that carry one,
    /// otherwise a fourth-order central difference.
    pub fn derivative(&self, x: f64) -> f64 {
        match &self.form {
            TestFunctionForm::Polynomial(c) => {
                let dc: Vec<f64> = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, &ci)| i as f64 * ci)
                    .collect();
                horner(&dc, x)
            }
            TestFunctionForm::Closure { f, df } => match df {
                Some(df) => df(x),
                None => {
                    let h = 1e-5 * (1.0 + x.abs());
                    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h)))
                        / (12.0 * h)
                }
            },
        }
    }

    pub fn degree(&self) -> Option<usize> {
        match &self.form {
            TestFunctionForm::Polynomial(c) => {
                Some(c.iter().rposition(|&ci| ci != 0.0).unwrap_or(0))
            }
            TestFunctionForm::Closure { .. } => None,
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Coefficients of a test function in the rescaled first-kind basis at a
/// given `gamma`, with the magnitude of the trailing coefficients reported
/// so downstream truncation error is auditable.
#[derive(Debug, Clone)]
pub struct ChebCoeffs {
    pub gamma: f64,
    pub coeffs: Vec<f64>,
    pub tail_bound: f64,
}

impl ChebCoeffs {
    pub fn truncation_order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn reconstruct(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * cheb_t(k, self.gamma, x))
            .sum()
    }
}

fn check_gamma(gamma: f64) -> Result<(), ChebError> {
    if !(gamma > 0.0) {
        return Err(ChebError::NonPositiveGamma(gamma));
    }
    Ok(())
}

/// Rescaled first-kind polynomial `cos(k arccos(x / 2 sqrt(gamma)))`.
/// Outside the support the hyperbolic continuation `cosh(k arccosh(.))` is
/// used (diagnostics only; covariance formulas never leave the support).
pub fn cheb_t(k: usize, gamma: f64, x: f64) -> f64 {
    assert!(gamma > 0.0, "cheb_t needs gamma > 0, got {gamma}");
    let t = x / (2.0 * gamma.sqrt());
    if t.abs() <= 1.0 {
        (k as f64 * t.acos()).cos()
    } else {
        let sign = if t < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        sign * (k as f64 * t.abs().acosh()).cosh()
    }
}

/// True when `x` lies inside the spectral support `[-2 sqrt(gamma), 2 sqrt(gamma)]`.
pub fn in_support(gamma: f64, x: f64) -> bool {
    x.abs() <= 2.0 * gamma.sqrt()
}

/// Rescaled second-kind polynomial, evaluated by the three-term recurrence
/// `U_{k+1} = (x / sqrt(gamma)) U_k - U_{k-1}` (valid on and off support).
pub fn cheb_u(k: usize, gamma: f64, x: f64) -> f64 {
    assert!(gamma > 0.0, "cheb_u needs gamma > 0, got {gamma}");
    let s = x / gamma.sqrt();
    let mut prev = 1.0; // U_0
    if k == 0 {
        return prev;
    }
    let mut cur = s; // U_1
    for _ in 1..k {
        let next = s * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Second-kind polynomial by its alternating binomial sum,
/// `sum_j (-1)^j C(k-j, j) (x / sqrt(gamma))^(k-2j)`. Kept as an
/// independent evaluation route against the recurrence and the trig form.
///
/// The alternating terms reach ~2^k near the support edge while the value
/// stays below `k + 1`, so the sum is accumulated in double-double
/// arithmetic; plain f64 would lose every significant digit by `k ~ 40`.
pub fn cheb_u_binomial(k: usize, gamma: f64, x: f64) -> f64 {
    assert!(gamma > 0.0, "cheb_u_binomial needs gamma > 0, got {gamma}");
    let s = x / gamma.sqrt();
    // Double-double powers of s: powers[m] ~ s^m with ~32-digit accuracy.
    let mut powers = Vec::with_capacity(k + 1);
    powers.push(Dd { hi: 1.0, lo: 0.0 });
    for m in 1..=k {
        powers.push(dd_mul_f64(powers[m - 1], s));
    }
    let mut total = Dd { hi: 0.0, lo: 0.0 };
    for j in 0..=(k / 2) {
        let coeff = binomial_f64(k - j, j);
        let mut term = dd_mul_f64(powers[k - 2 * j], coeff);
        if j % 2 == 1 {
            term.hi = -term.hi;
            term.lo = -term.lo;
        }
        total = dd_add(total, term);
    }
    total.hi + total.lo
}

#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let hi = a + b;
    let v = hi - a;
    let lo = (a - (hi - v)) + (b - v);
    Dd { hi, lo }
}

fn dd_add(a: Dd, b: Dd) -> Dd {
    let s = two_sum(a.hi, b.hi);
    let lo = s.lo + a.lo + b.lo;
    let hi = s.hi + lo;
    Dd {
        hi,
        lo: lo - (hi - s.hi),
    }
}

fn dd_mul_f64(a: Dd, b: f64) -> Dd {
    let p = a.hi * b;
    // Exact product error via fused multiply-add.
    let e = a.hi.mul_add(b, -p) + a.lo * b;
    let hi = p + e;
    Dd {
        hi,
        lo: e - (hi - p),
    }
}

fn binomial_f64(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    let mut acc = 1.0f64;
    for i in 0..r {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Gauss–Chebyshev nodes in theta: `theta_i = pi (i + 1/2) / nodes`.
fn gc_thetas(nodes: usize) -> impl Iterator<Item = f64> {
    (0..nodes).map(move |i| PI * (i as f64 + 0.5) / nodes as f64)
}

/// Expands a test function in the rescaled first-kind basis through order
/// `k_max` using `nodes`-point Gauss–Chebyshev quadrature (exact for
/// polynomial integrands of degree below `nodes`).
pub fn cheb_coeffs(
    phi: &TestFunction,
    gamma: f64,
    k_max: usize,
    nodes: usize,
) -> Result<ChebCoeffs, ChebError> {
    check_gamma(gamma)?;
    if nodes < 4 * k_max.max(1) {
        return Err(ChebError::InsufficientNodes { k: k_max, nodes });
    }
    let half_width = 2.0 * gamma.sqrt();
    let samples: Vec<(f64, f64)> = gc_thetas(nodes)
        .map(|theta| {
            let x = half_width * theta.cos();
            (theta, phi.eval(x))
        })
        .collect();
    for &(theta, v) in &samples {
        if !v.is_finite() {
            return Err(ChebError::NonFiniteValue(half_width * theta.cos()));
        }
    }
    let mut coeffs = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let sum: f64 = samples
            .iter()
            .map(|&(theta, v)| v * (k as f64 * theta).cos())
            .sum();
        let factor = if k == 0 { 1.0 } else { 2.0 };
        coeffs.push(factor * sum / nodes as f64);
    }
    let tail_bound = coeffs
        .iter()
        .rev()
        .take(5)
        .fold(0.0f64, |m, c| m.max(c.abs()));
    Ok(ChebCoeffs {
        gamma,
        coeffs,
        tail_bound,
    })
}

/// Coefficients in the second-kind basis at `gamma`, via orthonormality
/// under the semicircle weight: `f_k = (2/pi) int f(2 sqrt(g) cos t)
/// sin((k+1) t) sin(t) dt`.
pub fn cheb_u_coeffs(
    phi: &TestFunction,
    gamma: f64,
    k_max: usize,
    nodes: usize,
) -> Result<Vec<f64>, ChebError> {
    check_gamma(gamma)?;
    if nodes < 4 * k_max.max(1) {
        return Err(ChebError::InsufficientNodes { k: k_max, nodes });
    }
    let half_width = 2.0 * gamma.sqrt();
    let samples: Vec<(f64, f64)> = gc_thetas(nodes)
        .map(|theta| (theta, phi.eval(half_width * theta.cos())))
        .collect();
    let mut coeffs = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let sum: f64 = samples
            .iter()
            .map(|&(theta, v)| v * ((k as f64 + 1.0) * theta).sin() * theta.sin())
            .sum();
        coeffs.push(2.0 * sum / nodes as f64);
    }
    Ok(coeffs)
}

/// Moments of the variance-`gamma` semicircle law: zero at odd orders,
/// `Catalan(m/2) gamma^(m/2)` at even orders.
pub fn semicircle_moment(gamma: f64, m: usize) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    let half = m / 2;
    catalan(half) * gamma.powi(half as i32)
}

fn catalan(m: usize) -> f64 {
    // C(2m, m) / (m + 1), exact in u128 far past every order used here.
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..m {
        num *= (2 * m - i) as u128;
        den *= (i + 1) as u128;
    }
    (num / den) as f64 / (m as f64 + 1.0)
}

/// Weights for the integral transforms that appear in the limiting
/// covariance formulas, all over `[-2 sqrt(gamma), 2 sqrt(gamma)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// `sqrt(4 gamma - x^2) / (2 pi gamma)` — the semicircle density.
    Semicircle,
    /// `x / sqrt(4 gamma - x^2)` — the first-coefficient transform.
    Odd,
    /// `(2 gamma - x^2) / sqrt(4 gamma - x^2)` — the fourth-cumulant transform.
    Kappa4,
}

/// Integral of `phi` against the chosen weight, via the substitution
/// `x = 2 sqrt(gamma) cos(theta)` and a uniform trapezoid rule in theta
/// (the substitution removes the endpoint singularities exactly, and the
/// rule is spectrally accurate for smooth integrands).
pub fn weighted_integral(phi: &TestFunction, gamma: f64, kind: WeightKind, nodes: usize) -> f64 {
    assert!(gamma > 0.0, "weighted_integral needs gamma > 0, got {gamma}");
    let half_width = 2.0 * gamma.sqrt();
    let h = PI / nodes as f64;
    let mut total = 0.0;
    for i in 0..=nodes {
        let theta = i as f64 * h;
        let x = half_width * theta.cos();
        let v = phi.eval(x);
        let integrand = match kind {
            WeightKind::Semicircle => {
                let s = theta.sin();
                2.0 / PI * v * s * s
            }
            WeightKind::Odd => v * half_width * theta.cos(),
            WeightKind::Kappa4 => -2.0 * gamma * v * (2.0 * theta).cos(),
        };
        let w = if i == 0 || i == nodes { 0.5 } else { 1.0 };
        total += w * integrand;
    }
    total * h
}

/// The functional `B_phi = (1 / (pi gamma^2)) int phi (2 gamma - x^2) /
/// sqrt(4 gamma - x^2) dx` entering the fourth-cumulant covariance term.
pub fn b_phi(phi: &TestFunction, gamma: f64, nodes: usize) -> f64 {
    weighted_integral(phi, gamma, WeightKind::Kappa4, nodes) / (PI * gamma * gamma)
}
