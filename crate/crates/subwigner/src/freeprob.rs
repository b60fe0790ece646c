//! Exact combinatorial oracle for the submatrix bilinear form.
//!
//! The limit of `n^{-1} E Tr { P_l f(M_l) P_lr g(M_r) P_r }` reduces, for
//! monomials `f = x^k`, `g = x^q`, to a weighted count of non-crossing pair
//! partitions of `k + q` letters (equivalently, Dyck paths): each path is
//! weighted by `gamma_l^(down steps among the first k) *
//! gamma_r^(up steps among the last q) * gamma_lr^(remaining blocks)`.
//! Partitioning paths by their height at step `k` yields closed binomial
//! sums; those are the production formulas, and brute-force enumeration is
//! kept alongside as the cross-check.
//!
//! Everything here runs in exact rational arithmetic — this module is the
//! ground truth the floating-point paths are measured against.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FreeProbError {
    #[error("enumeration capped at m = 12 pair blocks, got {0}")]
    EnumerationTooLarge(usize),
    #[error("partition sum capped at k + q = 20, got {0}")]
    PartitionSumTooLarge(usize),
    #[error("height parity violated: paths of  k = {k} steps sit at even heights iff k is even, got j = {j}")]
    ParityViolation { k: usize, j: usize },
    #[error("k + q = {0} must be even for a nonzero Dyck count")]
    OddTotalLength(usize),
}

/// Rational overlap data for exact computations. `sqrt_gamma_l` and
/// `sqrt_gamma_r` only need to exist (i.e. the gammas be rational squares)
/// when expanding second-kind polynomials; the monomial formulas never
/// take square roots.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalGeometry {
    pub gamma_l: BigRational,
    pub gamma_r: BigRational,
    pub gamma_lr: BigRational,
}

impl RationalGeometry {
    pub fn new(gamma_l: (i64, i64), gamma_r: (i64, i64), gamma_lr: (i64, i64)) -> Self {
        let r = |(n, d): (i64, i64)| BigRational::new(BigInt::from(n), BigInt::from(d));
        RationalGeometry {
            gamma_l: r(gamma_l),
            gamma_r: r(gamma_r),
            gamma_lr: r(gamma_lr),
        }
    }
}

/// A non-crossing perfect matching of `{0, .., 2m-1}`, stored as
/// `(opener, closer)` pairs sorted by opener.
#[derive(Debug, Clone, PartialEq)]
pub struct NcPairPartition {
    pub pairs: Vec<(usize, usize)>,
}

impl NcPairPartition {
    pub fn letters(&self) -> usize {
        2 * self.pairs.len()
    }

    /// The corresponding Dyck path: +1 at openers, -1 at closers.
    pub fn dyck_steps(&self) -> Vec<i8> {
        let mut steps = vec![-1i8; self.letters()];
        for &(open, _) in &self.pairs {
            steps[open] = 1;
        }
        steps
    }
}

/// Prefix heights `h(0), .., h(2m)` of a Dyck path.
pub fn dyck_heights(steps: &[i8]) -> Vec<i64> {
    let mut heights = Vec::with_capacity(steps.len() + 1);
    let mut h = 0i64;
    heights.push(h);
    for &s in steps {
        h += s as i64;
        heights.push(h);
    }
    heights
}

/// All non-crossing pair matchings of `2m` letters (there are Catalan(m)).
pub fn enumerate_ncp(m: usize) -> Result<Vec<NcPairPartition>, FreeProbError> {
    if m > 12 {
        return Err(FreeProbError::EnumerationTooLarge(m));
    }
    let mut out = Vec::new();
    let mut steps = Vec::with_capacity(2 * m);
    gen_dyck(2 * m, 0, &mut steps, &mut out);
    Ok(out)
}

fn gen_dyck(total: usize, height: i64, steps: &mut Vec<i8>, out: &mut Vec<NcPairPartition>) {
    if steps.len() == total {
        if height == 0 {
            out.push(match_parens(steps));
        }
        return;
    }
    let remaining = (total - steps.len()) as i64;
    // An up step is feasible iff the remaining steps can still descend to 0.
    if height + 1 <= remaining - 1 {
        steps.push(1);
        gen_dyck(total, height + 1, steps, out);
        steps.pop();
    }
    if height > 0 {
        steps.push(-1);
        gen_dyck(total, height - 1, steps, out);
        steps.pop();
    }
}

fn match_parens(steps: &[i8]) -> NcPairPartition {
    let mut stack = Vec::new();
    let mut pairs = Vec::with_capacity(steps.len() / 2);
    for (i, &s) in steps.iter().enumerate() {
        if s == 1 {
            stack.push(i);
        } else {
            let open = stack.pop().expect("balanced steps");
            pairs.push((open, i));
        }
    }
    pairs.sort_unstable();
    NcPairPartition { pairs }
}

fn big_binomial(n: usize, r_signed: i64) -> BigInt {
    if r_signed < 0 || r_signed as usize > n {
        return BigInt::zero();
    }
    let r = (r_signed as usize).min(n - r_signed as usize);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..r {
        num *= n - i;
        den *= i + 1;
    }
    num / den
}

/// Number of Dyck paths `(h(0), .., h(k+q))` with `h(k) = j`, evaluated by
/// both displayed forms — the product of ballot differences and the
/// factored binomial expression — which are asserted equal.
pub fn dyck_count_at_height(k: usize, q: usize, j: usize) -> Result<BigInt, FreeProbError> {
    if (k + q) % 2 != 0 {
        return Err(FreeProbError::OddTotalLength(k + q));
    }
    if j % 2 != k % 2 {
        return Err(FreeProbError::ParityViolation { k, j });
    }
    let ballot = |steps: usize, h: usize| -> BigInt {
        big_binomial(steps, ((steps + h) / 2) as i64) - big_binomial(steps, ((steps + h) / 2 + 1) as i64)
    };
    let product = ballot(k, j) * ballot(q, j);

    let jj = BigInt::from((j + 1) * (j + 1));
    let factored_num = jj
        * big_binomial(k + 1, ((k + j) / 2 + 1) as i64)
        * big_binomial(q + 1, ((q + j) / 2 + 1) as i64);
    let denom = BigInt::from((k + 1) * (q + 1));
    let factored = BigRational::new(factored_num, denom);

    assert_eq!(
        BigRational::from(product.clone()),
        factored,
        "the two Dyck-count forms disagree at k={k} q={q} j={j}"
    );
    Ok(product)
}

/// The bilinear form on monomials, `<x^k, x^q>`, by the closed binomial
/// sums over path height classes. Zero when `k + q` is odd.
pub fn moment_monomial(k: usize, q: usize, geom: &RationalGeometry) -> BigRational {
    if (k + q) % 2 != 0 {
        return BigRational::zero();
    }
    let mut total = BigRational::zero();
    if k % 2 == 0 {
        // Even/even: height at step k is 2j, down steps among the first k
        // number k/2 - j, up steps among the last q number q/2 - j, and
        // 2j + 1 blocks straddle.
        for j in 0..=(k / 2).min(q / 2) {
            let count = BigRational::new(
                BigInt::from((2 * j + 1) * (2 * j + 1))
                    * big_binomial(k + 1, ((k + 2 * j + 2) / 2) as i64)
                    * big_binomial(q + 1, ((q + 2 * j + 2) / 2) as i64),
                BigInt::from((k + 1) * (q + 1)),
            );
            let weight = pow_rational(&geom.gamma_l, k / 2 - j)
                * pow_rational(&geom.gamma_r, q / 2 - j)
                * pow_rational(&geom.gamma_lr, 2 * j + 1);
            total += count * weight;
        }
    } else {
        // Odd/odd: height at step k is 2j + 1 and 2j + 2 blocks straddle.
        for j in 0..=((k - 1) / 2).min((q - 1) / 2) {
            let count = BigRational::new(
                BigInt::from((2 * j + 2) * (2 * j + 2))
                    * big_binomial(k + 1, ((k + 2 * j + 3) / 2) as i64)
                    * big_binomial(q + 1, ((q + 2 * j + 3) / 2) as i64),
                BigInt::from((k + 1) * (q + 1)),
            );
            let weight = pow_rational(&geom.gamma_l, (k - 1) / 2 - j)
                * pow_rational(&geom.gamma_r, (q - 1) / 2 - j)
                * pow_rational(&geom.gamma_lr, 2 * j + 2);
            total += count * weight;
        }
    }
    total
}

fn pow_rational(x: &BigRational, e: usize) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// The same bilinear form by brute force: enumerate every non-crossing pair
/// matching of `k + q` letters and apply the per-path weight directly.
pub fn moment_via_partitions(
    k: usize,
    q: usize,
    geom: &RationalGeometry,
) -> Result<BigRational, FreeProbError> {
    if k + q > 20 {
        return Err(FreeProbError::PartitionSumTooLarge(k + q));
    }
    if (k + q) % 2 != 0 {
        return Ok(BigRational::zero());
    }
    let m = (k + q) / 2;
    let mut total = BigRational::zero();
    for partition in enumerate_ncp(m)? {
        total += path_weight(&partition, k, q, geom);
    }
    Ok(total)
}

/// Weight of one matching: count down steps among the first `k` letters and
/// up steps among the last `q`; every remaining block of the complement
/// partition straddles and carries `gamma_lr`. The complement of a pair
/// partition of `k + q` letters has `(k + q)/2 + 1` blocks.
fn path_weight(partition: &NcPairPartition, k: usize, q: usize, geom: &RationalGeometry) -> BigRational {
    let steps = partition.dyck_steps();
    let down_first = steps[..k].iter().filter(|&&s| s == -1).count();
    let up_last = steps[k..].iter().filter(|&&s| s == 1).count();
    let blocks = (k + q) / 2 + 1;
    let straddling = blocks - down_first - up_last;
    pow_rational(&geom.gamma_l, down_first)
        * pow_rational(&geom.gamma_r, up_last)
        * pow_rational(&geom.gamma_lr, straddling)
}

/// Which of the two alternating factorial sums to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HKind {
    H1,
    H2,
}

/// Both evaluations of the alternating sum: the term-by-term factorial sum
/// and its hypergeometric closed form, returned as a pair for equality
/// testing. The closed form collapses to 0 for `j < q` and to
/// `1/(2q+1)` (resp. `1/(2q+2)`) at `j = q`.
pub fn hyp_h(kind: HKind, q: usize, j: usize) -> (BigRational, BigRational) {
    assert!(j <= q, "hyp_h requires 0 <= j <= q");
    let mut sum = BigRational::zero();
    for p in 0..=(q - j) {
        // H1 term: (-1)^p (2q - p)! / (p! (q - p + j + 1)! (q - p - j)!)
        // H2 term: (-1)^p (2q - p + 1)! / (p! (q - p + j + 2)! (q - p - j)!)
        let (top, shift) = match kind {
            HKind::H1 => (2 * q - p, 1usize),
            HKind::H2 => (2 * q - p + 1, 2usize),
        };
        let num = factorial(top);
        let den = factorial(p) * factorial(q - p + j + shift) * factorial(q - p - j);
        let term = BigRational::new(num, den);
        if p % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }

    // Closed form via the rising-factorial ratio; the factor
    // (j - q + 1)_(q - j) runs through zero whenever j < q.
    let (lead_num, lead_den, base) = match kind {
        HKind::H1 => (
            factorial(2 * q),
            factorial(q - j) * factorial(q + j + 1),
            -2 * (q as i64),
        ),
        HKind::H2 => (
            factorial(2 * q + 1),
            factorial(q - j) * factorial(q + j + 2),
            -(2 * q as i64) - 1,
        ),
    };
    let rising = |start: i64, terms: usize| -> BigRational {
        let mut acc = BigRational::one();
        for i in 0..terms {
            acc *= BigRational::from(BigInt::from(start + i as i64));
        }
        acc
    };
    let closed = BigRational::new(lead_num, lead_den) * rising(j as i64 - q as i64 + 1, q - j)
        / rising(base, q - j);
    (sum, closed)
}

fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// Bilinear form on polynomials with rational coefficients, by linearity
/// over the monomial values.
pub fn moment_polynomial(
    f: &[BigRational],
    g: &[BigRational],
    geom: &RationalGeometry,
) -> BigRational {
    let mut total = BigRational::zero();
    for (i, a) in f.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (j, b) in g.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            total += a * b * moment_monomial(i, j, geom);
        }
    }
    total
}

/// Monomial coefficients of the rescaled second-kind polynomial at a
/// rational-square scale `gamma = sqrt_gamma^2`:
/// `U_k = sum_j (-1)^j C(k-j, j) (x / sqrt_gamma)^(k-2j)`.
pub fn u_polynomial_coeffs(k: usize, sqrt_gamma: &BigRational) -> Vec<BigRational> {
    let mut coeffs = vec![BigRational::zero(); k + 1];
    let inv = sqrt_gamma.recip();
    for j in 0..=(k / 2) {
        let power = k - 2 * j;
        let mut c = BigRational::from(big_binomial(k - j, j as i64)) * pow_rational(&inv, power);
        if j % 2 == 1 {
            c = -c;
        }
        coeffs[power] = c;
    }
    coeffs
}

/// Exact diagonalization value `sqrt(gamma_l gamma_r) * delta_kq * beta^(k+1)`
/// at a rational-square geometry, for cross-checks against
/// [`moment_polynomial`] applied to second-kind polynomials.
pub fn u_pairing_exact(
    k: usize,
    q: usize,
    sqrt_gamma_l: &BigRational,
    sqrt_gamma_r: &BigRational,
    gamma_lr: &BigRational,
) -> BigRational {
    if k != q {
        return BigRational::zero();
    }
    let root_product = sqrt_gamma_l * sqrt_gamma_r;
    if gamma_lr.is_zero() {
        // beta^(k+1) with beta = 0: nonzero only via the k = -1 convention,
        // which never arises; the pairing is zero outright.
        return BigRational::zero();
    }
    let beta = gamma_lr / &root_product;
    &root_product * pow_rational(&beta, k + 1)
}
