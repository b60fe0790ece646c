//! Dense square matrix storage shared by the sampler and the eigensolver.

/// Row-major dense square matrix of `f64`.
///
/// The sampler fills it symmetrically; the eigensolver and the submatrix
/// gather consume it. No attempt is made at packed storage: orders stay in
/// the low thousands and clarity wins.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(order: usize) -> Self {
        SquareMatrix {
            order,
            data: vec![0.0; order * order],
        }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let order = rows.len();
        let mut data = Vec::with_capacity(order * order);
        for row in rows {
            assert_eq!(row.len(), order, "rows must form a square matrix");
            data.extend_from_slice(row);
        }
        SquareMatrix { order, data }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.order + j] = value;
    }

    /// Writes `value` to both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set_symmetric(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.order + j] = value;
        self.data[j * self.order + i] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.order..(i + 1) * self.order]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest `|a_ij - a_ji|` over all index pairs.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.order {
            for j in (i + 1)..self.order {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}
