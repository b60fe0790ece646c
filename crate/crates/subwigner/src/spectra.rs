//! Symmetric eigensolve and linear eigenvalue statistics.
//!
//! The solver is the classical two-stage dense path: Householder reduction
//! to tridiagonal form followed by implicit-shift QL iteration, ported from
//! the EISPACK/JAMA lineage. The hot path computes eigenvalues only; a
//! vector-accumulating variant exists for residual spot checks in tests.

use thiserror::Error;

use crate::chebfn::TestFunction;
use crate::ensemble::{IndexFamilyRealization, WignerSample};
use crate::matrix::SquareMatrix;

/// Sweeps of QL iteration allowed per eigenvalue before giving up.
const MAX_QL_SWEEPS: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum SpectraError {
    #[error("matrix is not symmetric: max |a_ij - a_ji| = {asymmetry:e} exceeds {tol:e}")]
    NotSymmetric { asymmetry: f64, tol: f64 },
    #[error("QL iteration failed to converge within {MAX_QL_SWEEPS} sweeps at eigenvalue {index}")]
    NoConvergence { index: usize },
    #[error("submatrix index {index} out of range for order {order}")]
    IndexOutOfRange { index: usize, order: usize },
}

/// Eigenvalues of a real symmetric matrix, sorted ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub source_order: usize,
}

/// One replica's vector of linear eigenvalue statistics.
#[derive(Debug, Clone)]
pub struct StatisticVector {
    pub values: Vec<f64>,
    pub replica_index: u64,
}

fn check_symmetric(matrix: &SquareMatrix) -> Result<(), SpectraError> {
    let asymmetry = matrix.max_asymmetry();
    let tol = 1e-12 * matrix.max_abs_entry().max(1.0);
    if asymmetry > tol {
        return Err(SpectraError::NotSymmetric { asymmetry, tol });
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix (no eigenvectors).
pub fn symmetric_eigenvalues(matrix: &SquareMatrix) -> Result<Spectrum, SpectraError> {
    check_symmetric(matrix)?;
    let n = matrix.order();
    let mut work = matrix.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut work, n, &mut d, &mut e);
    ql_implicit(&mut d, &mut e, None, n)?;
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(Spectrum {
        eigenvalues: d,
        source_order: n,
    })
}

/// Full decomposition: eigenvalues ascending plus the orthogonal matrix of
/// column eigenvectors. Used for residual spot checks; the statistics path
/// never needs vectors.
pub fn symmetric_eigen_with_vectors(
    matrix: &SquareMatrix,
) -> Result<(Spectrum, SquareMatrix), SpectraError> {
    check_symmetric(matrix)?;
    let n = matrix.order();
    let mut v = matrix.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize_accumulate(&mut v, n, &mut d, &mut e);
    ql_implicit(&mut d, &mut e, Some(&mut v), n)?;
    // Insertion sort of eigenvalues with matching column swaps.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        for j in (i + 1)..n {
            if d[j] < d[k] {
                k = j;
            }
        }
        if k != i {
            d.swap(i, k);
            for row in 0..n {
                v.swap(row * n + i, row * n + k);
            }
        }
    }
    let mut vectors = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            vectors.set(i, j, v[i * n + j]);
        }
    }
    Ok((
        Spectrum {
            eigenvalues: d,
            source_order: n,
        },
        vectors,
    ))
}

// Householder reduction to symmetric tridiagonal form, eigenvalues-only
// variant: the transformations are applied but not accumulated. Derived
// from the Algol tred2/tred1 procedures (Bowdler, Martin, Reinsch,
// Wilkinson) via the EISPACK Fortran, with the symmetric matvec and the
// rank-2 update walked row-wise so the hot loops stay contiguous in the
// row-major lower triangle.
fn tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    if n == 1 {
        d[0] = a[0];
        e[0] = 0.0;
        return;
    }
    for j in 0..n {
        d[j] = a[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut h = 0.0;
        let mut scale = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = a[(i - 1) * n + j];
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            // p = A u on the leading i x i block, lower storage, row-wise.
            for j in 0..i {
                e[j] = 0.0;
            }
            for k in 0..i {
                let dk = d[k];
                let row = &a[k * n..k * n + k + 1];
                let mut acc = row[k] * dk;
                for j in 0..k {
                    e[j] += row[j] * dk;
                    acc += row[j] * d[j];
                }
                e[k] += acc;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            // Rank-2 update A -= d e^T + e d^T, lower triangle, row-wise.
            for k in 0..i {
                let dk = d[k];
                let ek = e[k];
                let row = &mut a[k * n..k * n + k + 1];
                for (j, entry) in row.iter_mut().enumerate() {
                    *entry -= dk * e[j] + ek * d[j];
                }
            }
            for j in 0..i {
                d[j] = a[(i - 1) * n + j];
            }
        }
    }
    d[0] = a[0];
    for i in 1..n {
        d[i] = a[i * n + i];
    }
    e[0] = 0.0;
}

// Householder reduction with accumulated transformations; `v` enters as the
// matrix and leaves as the orthogonal factor. JAMA tred2.
fn tridiagonalize_accumulate(v: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut h = 0.0;
        let mut scale = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                let f = d[j];
                v[j * n + i] = f;
                let mut g = e[j] + v[j * n + j] * f;
                for k in (j + 1)..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
}

// Implicit-shift QL on the tridiagonal (d, e). When `v` is given the
// rotations are accumulated into it. JAMA tql2 with an explicit sweep cap.
fn ql_implicit(
    d: &mut [f64],
    e: &mut [f64],
    mut v: Option<&mut [f64]>,
    n: usize,
) -> Result<(), SpectraError> {
    if n <= 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m >= n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                if iter > MAX_QL_SWEEPS {
                    return Err(SpectraError::NoConvergence { index: l });
                }
                // Implicit Wilkinson shift.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in (l + 2)..n {
                    d[i] -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(vv) = v.as_deref_mut() {
                        for k in 0..n {
                            let h = vv[k * n + i + 1];
                            vv[k * n + i + 1] = s * vv[k * n + i] + c * h;
                            vv[k * n + i] = c * vv[k * n + i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Principal submatrix of the sample on the sorted 0-based index list `b`,
/// ordering inherited.
pub fn submatrix(sample: &WignerSample, b: &[usize]) -> Result<SquareMatrix, SpectraError> {
    let n = sample.n;
    let m = b.len();
    let mut out = SquareMatrix::zeros(m);
    for (i, &bi) in b.iter().enumerate() {
        if bi >= n {
            return Err(SpectraError::IndexOutOfRange { index: bi, order: n });
        }
        let row = sample.entries.row(bi);
        for (j, &bj) in b.iter().enumerate() {
            out.set(i, j, row[bj]);
        }
    }
    Ok(out)
}

/// The linear eigenvalue statistic `sum_i phi(lambda_i)`.
///
/// Always taken over the `|B|`-order submatrix spectrum: the zero-padded
/// projection would only add `(n - |B|)` zero eigenvalues, whose constant
/// `phi(0)` contribution cancels under centering.
pub fn linear_statistic(spectrum: &Spectrum, phi: &TestFunction) -> f64 {
    spectrum.eigenvalues.iter().map(|&x| phi.eval(x)).sum()
}

/// Evaluates one statistic per index set: entry `l` is the linear statistic
/// of `phi_l` over the spectrum of the principal submatrix on `B_l`.
pub fn statistics_vector(
    sample: &WignerSample,
    family: &IndexFamilyRealization,
    phis: &[TestFunction],
    replica_index: u64,
) -> Result<StatisticVector, SpectraError> {
    assert_eq!(phis.len(), family.d(), "one test function per index set");
    let mut values = Vec::with_capacity(phis.len());
    for (set, phi) in family.sets.iter().zip(phis) {
        let sub = submatrix(sample, set)?;
        let spectrum = symmetric_eigenvalues(&sub)?;
        values.push(linear_statistic(&spectrum, phi));
    }
    Ok(StatisticVector {
        values,
        replica_index,
    })
}
