//! Entry distributions, Wigner matrix sampling, and index-set families.
//!
//! A Wigner matrix here is `M = W / sqrt(n)` where the off-diagonal entries
//! of `W` are i.i.d. with mean zero and unit variance and the diagonal
//! entries are i.i.d. with mean zero and variance `sigma_sq_diag`. The
//! concrete laws shipped below are chosen so that the fourth cumulant of the
//! off-diagonal entries spans negative, zero, and positive values.
//!
//! Index sets are realized as sorted 0-based row lists together with their
//! exact sizes, pairwise intersection sizes, and limiting densities.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::SquareMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum EnsembleError {
    #[error("two-point parameter p = {0} must lie strictly inside (0, 1)")]
    TwoPointParameter(f64),
    #[error("diagonal variance must be nonnegative and finite, got {0}")]
    DiagonalVariance(f64),
    #[error("index spec {0} is invalid: {1}")]
    InvalidSpec(usize, String),
    #[error("index spec {spec} realizes an empty set at n = {n}")]
    EmptyRealizedSet { spec: usize, n: usize },
    #[error("matrix order must be at least 1")]
    ZeroOrder,
}

/// Concrete entry distribution families.
///
/// Every kind is normalized to mean zero and unit variance off the diagonal.
/// `TwoPoint { p }` takes the value `sqrt((1-p)/p)` with probability `p` and
/// `-sqrt(p/(1-p))` otherwise, which makes the fourth cumulant
/// `1/(p(1-p)) - 6` — positive once `p(1-p) < 1/6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EntryLawKind {
    Gaussian,
    Rademacher,
    Uniform,
    TwoPoint { p: f64 },
}

/// An entry distribution together with its cumulant metadata.
///
/// `mu4` and `kappa4` refer to the off-diagonal entries; `kappa3` is carried
/// for the cumulant-expansion self-check and vanishes for the symmetric
/// laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryLaw {
    pub kind: EntryLawKind,
    pub sigma_sq_diag: f64,
    pub mu4: f64,
    pub kappa4: f64,
    pub kappa3: f64,
}

impl EntryLaw {
    pub fn new(kind: EntryLawKind, sigma_sq_diag: f64) -> Result<Self, EnsembleError> {
        if !sigma_sq_diag.is_finite() || sigma_sq_diag < 0.0 {
            return Err(EnsembleError::DiagonalVariance(sigma_sq_diag));
        }
        let (mu4, kappa3) = match kind {
            EntryLawKind::Gaussian => (3.0, 0.0),
            EntryLawKind::Rademacher => (1.0, 0.0),
            EntryLawKind::Uniform => (9.0 / 5.0, 0.0),
            EntryLawKind::TwoPoint { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(EnsembleError::TwoPointParameter(p));
                }
                let pq = p * (1.0 - p);
                (1.0 / pq - 3.0, (1.0 - 2.0 * p) / pq.sqrt())
            }
        };
        Ok(EntryLaw {
            kind,
            sigma_sq_diag,
            mu4,
            kappa4: mu4 - 3.0,
            kappa3,
        })
    }

    pub fn gaussian(sigma_sq_diag: f64) -> Self {
        EntryLaw::new(EntryLawKind::Gaussian, sigma_sq_diag).expect("valid parameters")
    }

    pub fn rademacher(sigma_sq_diag: f64) -> Self {
        EntryLaw::new(EntryLawKind::Rademacher, sigma_sq_diag).expect("valid parameters")
    }

    pub fn uniform(sigma_sq_diag: f64) -> Self {
        EntryLaw::new(EntryLawKind::Uniform, sigma_sq_diag).expect("valid parameters")
    }

    /// Cumulant of the off-diagonal distribution, orders 1 through 4.
    pub fn off_diagonal_cumulant(&self, order: usize) -> f64 {
        match order {
            1 => 0.0,
            2 => 1.0,
            3 => self.kappa3,
            4 => self.kappa4,
            _ => panic!("cumulants tracked only through order 4"),
        }
    }

    /// One draw from the unit-variance off-diagonal distribution.
    pub fn sample_unit(&self, rng: &mut impl Rng) -> f64 {
        match self.kind {
            EntryLawKind::Gaussian => StandardNormal.sample(rng),
            EntryLawKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            // Uniform on [-sqrt(3), sqrt(3)] has unit variance.
            EntryLawKind::Uniform => (rng.random::<f64>() * 2.0 - 1.0) * 3.0f64.sqrt(),
            EntryLawKind::TwoPoint { p } => {
                if rng.random::<f64>() < p {
                    ((1.0 - p) / p).sqrt()
                } else {
                    -(p / (1.0 - p)).sqrt()
                }
            }
        }
    }

    /// One draw from the diagonal distribution (variance `sigma_sq_diag`).
    fn sample_diagonal(&self, rng: &mut impl Rng) -> f64 {
        self.sigma_sq_diag.sqrt() * self.sample_unit(rng)
    }
}

/// A sampled normalized Wigner matrix together with its provenance.
#[derive(Debug, Clone)]
pub struct WignerSample {
    pub n: usize,
    pub entries: SquareMatrix,
    pub law: EntryLaw,
    pub seed_path: (u64, u64),
}

/// Samples `M = W / sqrt(n)`, filling the upper triangle i.i.d. and
/// mirroring. Deterministic in `(law, n, master_seed, replica_index)`: the
/// RNG stream is keyed by the replica index alone, entries are drawn in a
/// fixed row-major order.
pub fn sample_wigner(
    n: usize,
    law: &EntryLaw,
    master_seed: u64,
    replica_index: u64,
) -> Result<WignerSample, EnsembleError> {
    if n == 0 {
        return Err(EnsembleError::ZeroOrder);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica_index);
    let scale = 1.0 / (n as f64).sqrt();
    let mut entries = SquareMatrix::zeros(n);
    for j in 0..n {
        entries.set(j, j, scale * law.sample_diagonal(&mut rng));
        for k in (j + 1)..n {
            entries.set_symmetric(j, k, scale * law.sample_unit(&mut rng));
        }
    }
    Ok(WignerSample {
        n,
        entries,
        law: *law,
        seed_path: (master_seed, replica_index),
    })
}

/// Constructive index-set specifications.
///
/// Each kind determines `B ⊂ {0, .., n-1}` at every order `n` and a limiting
/// density. `Explicit` lists 0-based rows verbatim; its "limiting" density
/// is the realized one at the order it is used with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum IndexSetSpec {
    /// First `floor(gamma * n)` rows.
    Prefix { gamma: f64 },
    /// Rows `floor(a * n) .. floor(b * n)` (half-open), `0 <= a < b <= 1`.
    Window { a: f64, b: f64 },
    /// Rows whose residue modulo `modulus` lies in `residues`.
    Stride { modulus: usize, residues: Vec<usize> },
    /// A verbatim list of 0-based rows.
    Explicit { indices: Vec<usize> },
}

impl IndexSetSpec {
    fn validate(&self, position: usize) -> Result<(), EnsembleError> {
        let fail = |msg: String| Err(EnsembleError::InvalidSpec(position, msg));
        match self {
            IndexSetSpec::Prefix { gamma } => {
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    return fail(format!("prefix gamma {gamma} outside (0, 1]"));
                }
            }
            IndexSetSpec::Window { a, b } => {
                if !(*a >= 0.0 && a < b && *b <= 1.0) {
                    return fail(format!("window ({a}, {b}) must satisfy 0 <= a < b <= 1"));
                }
            }
            IndexSetSpec::Stride { modulus, residues } => {
                if *modulus == 0 {
                    return fail("stride modulus must be positive".into());
                }
                if residues.is_empty() {
                    return fail("stride residue set is empty".into());
                }
                if residues.iter().any(|r| r >= modulus) {
                    return fail(format!("stride residues must be < modulus {modulus}"));
                }
            }
            IndexSetSpec::Explicit { indices } => {
                if indices.is_empty() {
                    return fail("explicit index list is empty".into());
                }
            }
        }
        Ok(())
    }

    /// The realized set at order `n`, sorted ascending, 0-based.
    pub fn realize(&self, n: usize) -> Vec<usize> {
        match self {
            IndexSetSpec::Prefix { gamma } => (0..floor_frac(*gamma, n)).collect(),
            IndexSetSpec::Window { a, b } => (floor_frac(*a, n)..floor_frac(*b, n)).collect(),
            IndexSetSpec::Stride { modulus, residues } => {
                let mut sorted = residues.clone();
                sorted.sort_unstable();
                sorted.dedup();
                (0..n).filter(|j| sorted.binary_search(&(j % modulus)).is_ok()).collect()
            }
            IndexSetSpec::Explicit { indices } => {
                let mut v: Vec<usize> = indices.iter().copied().filter(|&j| j < n).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }

    /// Limiting density of the realized sets; for `Explicit` the density at `n`.
    pub fn density(&self, n: usize) -> f64 {
        match self {
            IndexSetSpec::Prefix { gamma } => *gamma,
            IndexSetSpec::Window { a, b } => b - a,
            IndexSetSpec::Stride { modulus, residues } => {
                let mut sorted = residues.clone();
                sorted.sort_unstable();
                sorted.dedup();
                sorted.len() as f64 / *modulus as f64
            }
            IndexSetSpec::Explicit { .. } => self.realize(n).len() as f64 / n as f64,
        }
    }

    /// As an interval of [0, 1] when the kind is interval-like.
    fn as_interval(&self) -> Option<(f64, f64)> {
        match self {
            IndexSetSpec::Prefix { gamma } => Some((0.0, *gamma)),
            IndexSetSpec::Window { a, b } => Some((*a, *b)),
            _ => None,
        }
    }

    fn as_stride(&self) -> Option<(usize, Vec<usize>)> {
        match self {
            IndexSetSpec::Stride { modulus, residues } => {
                let mut sorted = residues.clone();
                sorted.sort_unstable();
                sorted.dedup();
                Some((*modulus, sorted))
            }
            _ => None,
        }
    }

    /// Limiting density of the pairwise intersection.
    ///
    /// Interval kinds intersect as intervals; stride pairs are resolved by
    /// counting compatible residues modulo the lcm; an interval meeting a
    /// stride multiplies densities (residues equidistribute in intervals).
    /// Pairs involving an explicit list fall back to the realized density.
    pub fn pair_density(&self, other: &IndexSetSpec, n: usize) -> f64 {
        if let (Some((a1, b1)), Some((a2, b2))) = (self.as_interval(), other.as_interval()) {
            return (b1.min(b2) - a1.max(a2)).max(0.0);
        }
        match (self.as_interval(), other.as_stride()) {
            (Some((a, b)), Some(_)) => return (b - a) * other.density(n),
            _ => {}
        }
        match (self.as_stride(), other.as_interval()) {
            (Some(_), Some((a, b))) => return (b - a) * self.density(n),
            _ => {}
        }
        if let (Some((m1, r1)), Some((m2, r2))) = (self.as_stride(), other.as_stride()) {
            // Each residue pair compatible modulo gcd pins exactly one
            // residue class modulo the lcm.
            let g = gcd(m1, m2);
            let l = m1 / g * m2;
            let compatible = r1
                .iter()
                .flat_map(|a| r2.iter().map(move |b| (a, b)))
                .filter(|(a, b)| (**a % g) == (**b % g))
                .count();
            return compatible as f64 / l as f64;
        }
        // At least one side is explicit: use the realized intersection.
        let left = self.realize(n);
        let right = other.realize(n);
        intersection_size(&left, &right) as f64 / n as f64
    }
}

fn floor_frac(x: f64, n: usize) -> usize {
    ((x * n as f64).floor() as usize).min(n)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// A family of index sets realized at a common order.
#[derive(Debug, Clone, Serialize)]
pub struct IndexFamilyRealization {
    pub n: usize,
    pub sets: Vec<Vec<usize>>,
    pub n_l: Vec<usize>,
    pub n_lm: Vec<Vec<usize>>,
    pub gamma_l: Vec<f64>,
    pub gamma_lm: Vec<Vec<f64>>,
}

/// Realizes every spec at order `n` with exact sizes, intersection sizes,
/// and limiting densities attached.
pub fn realize_index_family(
    specs: &[IndexSetSpec],
    n: usize,
) -> Result<IndexFamilyRealization, EnsembleError> {
    let d = specs.len();
    let mut sets = Vec::with_capacity(d);
    for (pos, spec) in specs.iter().enumerate() {
        spec.validate(pos)?;
        let set = spec.realize(n);
        if set.is_empty() {
            return Err(EnsembleError::EmptyRealizedSet { spec: pos, n });
        }
        sets.push(set);
    }
    let n_l: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    let mut n_lm = vec![vec![0usize; d]; d];
    let mut gamma_lm = vec![vec![0.0f64; d]; d];
    for l in 0..d {
        for m in 0..d {
            n_lm[l][m] = if l == m {
                n_l[l]
            } else {
                intersection_size(&sets[l], &sets[m])
            };
            gamma_lm[l][m] = if l == m {
                specs[l].density(n)
            } else {
                specs[l].pair_density(&specs[m], n)
            };
        }
    }
    let gamma_l: Vec<f64> = specs.iter().map(|s| s.density(n)).collect();
    Ok(IndexFamilyRealization {
        n,
        sets,
        n_l,
        n_lm,
        gamma_l,
        gamma_lm,
    })
}

/// The overlap data `(gamma_l, gamma_p, gamma_lp)` and the ratio
/// `beta = gamma_lp / sqrt(gamma_l * gamma_p)` which governs every limiting
/// covariance formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapGeometry {
    pub gamma_l: f64,
    pub gamma_p: f64,
    pub gamma_lp: f64,
    pub beta: f64,
}

impl OverlapGeometry {
    pub fn new(gamma_l: f64, gamma_p: f64, gamma_lp: f64) -> Self {
        let beta = if gamma_lp == 0.0 {
            0.0
        } else {
            gamma_lp / (gamma_l * gamma_p).sqrt()
        };
        OverlapGeometry {
            gamma_l,
            gamma_p,
            gamma_lp,
            beta,
        }
    }

    /// Geometry with the roles of `l` and `p` swapped.
    pub fn transposed(&self) -> Self {
        OverlapGeometry {
            gamma_l: self.gamma_p,
            gamma_p: self.gamma_l,
            gamma_lp: self.gamma_lp,
            beta: self.beta,
        }
    }
}

impl IndexFamilyRealization {
    /// Overlap geometry of the pair `(l, p)`, 0-based. `l == p` yields
    /// `beta = 1` exactly.
    pub fn overlap_geometry(&self, l: usize, p: usize) -> OverlapGeometry {
        if l == p {
            OverlapGeometry {
                gamma_l: self.gamma_l[l],
                gamma_p: self.gamma_l[l],
                gamma_lp: self.gamma_l[l],
                beta: 1.0,
            }
        } else {
            OverlapGeometry::new(self.gamma_l[l], self.gamma_l[p], self.gamma_lm[l][p])
        }
    }

    pub fn d(&self) -> usize {
        self.sets.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_law_cumulant_metadata() {
        let g = EntryLaw::gaussian(2.0);
        assert_eq!(g.mu4, 3.0);
        assert_eq!(g.kappa4, 0.0);

        let r = EntryLaw::rademacher(1.0);
        assert_eq!(r.mu4, 1.0);
        assert_eq!(r.kappa4, -2.0);

        let u = EntryLaw::uniform(1.0);
        assert!((u.mu4 - 9.0 / 5.0).abs() < 1e-15);
        assert!((u.kappa4 + 6.0 / 5.0).abs() < 1e-15);

        // p = 1/2 recovers the Rademacher cumulants.
        let t = EntryLaw::new(EntryLawKind::TwoPoint { p: 0.5 }, 1.0).unwrap();
        assert!((t.mu4 - 1.0).abs() < 1e-12);
        assert!((t.kappa4 + 2.0).abs() < 1e-12);
        assert!(t.kappa3.abs() < 1e-12);

        // p = 0.1 gives a positive fourth cumulant.
        let t = EntryLaw::new(EntryLawKind::TwoPoint { p: 0.1 }, 1.0).unwrap();
        assert!(t.kappa4 > 0.0);

        assert!(EntryLaw::new(EntryLawKind::TwoPoint { p: 0.0 }, 1.0).is_err());
        assert!(EntryLaw::new(EntryLawKind::TwoPoint { p: 1.0 }, 1.0).is_err());
        assert!(EntryLaw::new(EntryLawKind::Gaussian, -1.0).is_err());
    }

    #[test]
    fn sampling_is_symmetric_and_deterministic() {
        let law = EntryLaw::gaussian(2.0);
        let a = sample_wigner(512, &law, 7, 3).unwrap();
        let b = sample_wigner(512, &law, 7, 3).unwrap();
        assert_eq!(a.entries, b.entries);
        assert_eq!(a.entries.max_asymmetry(), 0.0);

        let c = sample_wigner(512, &law, 7, 4).unwrap();
        assert_ne!(a.entries, c.entries);
    }

    #[test]
    fn single_entry_matrix() {
        let law = EntryLaw::rademacher(1.0);
        let s = sample_wigner(1, &law, 0, 0).unwrap();
        // Order 1: the sole entry is a diagonal draw at scale 1.
        assert!((s.entries.get(0, 0).abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_moments_match_metadata() {
        // sqrt(n) * entries recover the unit-variance law; check mean,
        // variance, and mu4 within 5 empirical standard errors.
        for law in [
            EntryLaw::gaussian(2.0),
            EntryLaw::rademacher(1.0),
            EntryLaw::uniform(1.0),
            EntryLaw::new(EntryLawKind::TwoPoint { p: 0.2 }, 1.0).unwrap(),
        ] {
            let n = 2048;
            let s = sample_wigner(n, &law, 11, 0).unwrap();
            let root_n = (n as f64).sqrt();
            let mut values = Vec::with_capacity(n * (n - 1) / 2);
            for j in 0..n {
                for k in (j + 1)..n {
                    values.push(s.entries.get(j, k) * root_n);
                }
            }
            let count = values.len() as f64;
            let mean = values.iter().sum::<f64>() / count;
            let var = values.iter().map(|x| x * x).sum::<f64>() / count;
            let m4 = values.iter().map(|x| x.powi(4)).sum::<f64>() / count;
            let m8 = values.iter().map(|x| x.powi(8)).sum::<f64>() / count;

            let se_mean = (var / count).sqrt();
            assert!(mean.abs() < 5.0 * se_mean, "{law:?} mean {mean}");
            let se_var = ((law.mu4 - 1.0).max(0.0) / count).sqrt();
            assert!((var - 1.0).abs() < 5.0 * se_var + 1e-12, "{law:?} var {var}");
            let se_m4 = ((m8 - m4 * m4).max(0.0) / count).sqrt();
            assert!((m4 - law.mu4).abs() < 5.0 * se_m4 + 1e-12, "{law:?} mu4 {m4}");
        }
    }

    #[test]
    fn rademacher_offdiagonal_mean_bound() {
        let n = 2048;
        let s = sample_wigner(n, &EntryLaw::rademacher(1.0), 5, 0).unwrap();
        let root_n = (n as f64).sqrt();
        let mut sum = 0.0;
        let mut count = 0usize;
        for j in 0..n {
            for k in (j + 1)..n {
                sum += s.entries.get(j, k) * root_n;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        assert!(mean.abs() < 4.0 / (count as f64).sqrt());
    }

    #[test]
    fn realize_family_examples() {
        // Identical prefixes.
        let fam = realize_index_family(
            &[IndexSetSpec::Prefix { gamma: 0.5 }, IndexSetSpec::Prefix { gamma: 0.5 }],
            100,
        )
        .unwrap();
        assert_eq!(fam.n_l, vec![50, 50]);
        assert_eq!(fam.n_lm[0][1], 50);
        assert_eq!(fam.gamma_lm[0][1], 0.5);

        // Prefix against an offset window.
        let fam = realize_index_family(
            &[
                IndexSetSpec::Prefix { gamma: 0.5 },
                IndexSetSpec::Window { a: 0.25, b: 0.75 },
            ],
            100,
        )
        .unwrap();
        assert_eq!(fam.n_l, vec![50, 50]);
        assert_eq!(fam.n_lm[0][1], 25);
        assert_eq!(fam.gamma_lm[0][1], 0.25);

        // Disjoint windows.
        let fam = realize_index_family(
            &[
                IndexSetSpec::Window { a: 0.0, b: 0.5 },
                IndexSetSpec::Window { a: 0.5, b: 1.0 },
            ],
            100,
        )
        .unwrap();
        assert_eq!(fam.n_lm[0][1], 0);
        assert_eq!(fam.gamma_lm[0][1], 0.0);
    }

    #[test]
    fn stride_pair_density_matches_counting() {
        let s1 = IndexSetSpec::Stride { modulus: 4, residues: vec![0, 1] };
        let s2 = IndexSetSpec::Stride { modulus: 6, residues: vec![0, 2, 3] };
        let n = 120_000;
        let exact = s1.pair_density(&s2, n);
        let counted = intersection_size(&s1.realize(n), &s2.realize(n)) as f64 / n as f64;
        assert!((exact - counted).abs() < 1e-4, "{exact} vs {counted}");
    }

    #[test]
    fn prefix_and_stride_realizations_are_monotone() {
        let specs = [
            IndexSetSpec::Prefix { gamma: 0.37 },
            IndexSetSpec::Stride { modulus: 5, residues: vec![1, 3] },
        ];
        for spec in &specs {
            for n in 8..200 {
                let small = spec.realize(n);
                let big = spec.realize(n + 1);
                for j in &small {
                    assert!(big.contains(j), "{spec:?} loses {j} between {n} and {}", n + 1);
                }
            }
        }
    }

    #[test]
    fn window_density_converges() {
        // Moving windows cannot be monotone in n (the lower edge advances),
        // so the testable statement is the density error bound.
        let spec = IndexSetSpec::Window { a: 0.25, b: 0.75 };
        for n in [8, 100, 1000, 10_000] {
            let realized = spec.realize(n).len() as f64 / n as f64;
            assert!((realized - 0.5).abs() <= 2.0 / n as f64);
        }
    }

    #[test]
    fn overlap_geometry_examples() {
        let g = OverlapGeometry::new(0.5, 0.5, 0.25);
        assert_eq!(g.beta, 0.5);

        let fam = realize_index_family(&[IndexSetSpec::Prefix { gamma: 0.7 }], 100).unwrap();
        assert_eq!(fam.overlap_geometry(0, 0).beta, 1.0);

        let g = OverlapGeometry::new(0.5, 0.5, 0.0);
        assert_eq!(g.beta, 0.0);
    }

    #[test]
    fn overlap_bounds_for_interval_kinds() {
        // gamma_lp <= min(gamma_l, gamma_p) and >= max(0, gamma_l + gamma_p - 1).
        let n = 1000;
        let cases = [
            (IndexSetSpec::Prefix { gamma: 0.8 }, IndexSetSpec::Window { a: 0.1, b: 0.9 }),
            (IndexSetSpec::Window { a: 0.0, b: 0.6 }, IndexSetSpec::Window { a: 0.3, b: 1.0 }),
            (IndexSetSpec::Prefix { gamma: 0.9 }, IndexSetSpec::Prefix { gamma: 0.7 }),
        ];
        for (a, b) in cases {
            let fam = realize_index_family(&[a, b], n).unwrap();
            let g = fam.overlap_geometry(0, 1);
            assert!(g.gamma_lp <= g.gamma_l.min(g.gamma_p) + 1e-12);
            assert!(g.gamma_lp >= (g.gamma_l + g.gamma_p - 1.0).max(0.0) - 1e-12);
            assert!((0.0..=1.0 + 1e-12).contains(&g.beta));
        }
    }

    #[test]
    fn empty_realization_is_rejected() {
        let err = realize_index_family(&[IndexSetSpec::Explicit { indices: vec![500] }], 100);
        assert!(matches!(err, Err(EnsembleError::EmptyRealizedSet { .. })));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(128))]

            #[test]
            fn interval_overlap_bounds(
                a1 in 0.0f64..0.9,
                w1 in 0.05f64..1.0,
                a2 in 0.0f64..0.9,
                w2 in 0.05f64..1.0,
            ) {
                let b1 = (a1 + w1).min(1.0);
                let b2 = (a2 + w2).min(1.0);
                prop_assume!(b1 > a1 && b2 > a2);
                let s1 = IndexSetSpec::Window { a: a1, b: b1 };
                let s2 = IndexSetSpec::Window { a: a2, b: b2 };
                let fam = realize_index_family(&[s1, s2], 400).unwrap();
                let g = fam.overlap_geometry(0, 1);
                prop_assert!(g.gamma_lp <= g.gamma_l.min(g.gamma_p) + 1e-12);
                prop_assert!(g.gamma_lp >= (g.gamma_l + g.gamma_p - 1.0).max(0.0) - 1e-12);
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&g.beta));
                // Realized intersection tracks the limiting density.
                let realized = fam.n_lm[0][1] as f64 / 400.0;
                prop_assert!((realized - g.gamma_lp).abs() <= 2.0 / 400.0 + 1e-12);
            }
        }
    }
}
