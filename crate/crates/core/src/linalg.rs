//! Weighted least squares by blocked Householder QR.
//!
//! Rows are streamed in blocks and folded into a running `M x M` triangular
//! factor, so memory stays `O(M^2)` regardless of the number of samples and
//! the normal equations are never formed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const BLOCK_ROWS: usize = 512;

/// A column whose distance from the span of earlier columns is below this
/// fraction of its norm counts as dependent.
const RANK_TOL: f64 = 1e-10;

/// Accumulates rows `(phi, y, w)` of `min sum_n w_n (y_n - beta . phi_n)^2`.
///
/// Columns that are identically zero over all rows with positive weight, or
/// that are linear combinations of lower-index columns, carry no extra
/// information; their coefficients are pinned to zero instead of making the
/// system singular.
pub struct WeightedLeastSquares {
    dim: usize,
    r: DMatrix<f64>,
    qty: DVector<f64>,
    block: Vec<f64>,
    block_rhs: Vec<f64>,
    active: Vec<bool>,
    total_weight: f64,
    rows: usize,
}

impl WeightedLeastSquares {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            r: DMatrix::zeros(0, dim),
            qty: DVector::zeros(0),
            block: Vec::with_capacity(BLOCK_ROWS * dim),
            block_rhs: Vec::with_capacity(BLOCK_ROWS),
            active: vec![false; dim],
            total_weight: 0.0,
            rows: 0,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn push(&mut self, phi: &[f64], y: f64, weight: f64) {
        debug_assert_eq!(phi.len(), self.dim);
        if !(weight > 0.0) {
            return;
        }
        let s = weight.sqrt();
        for (j, &p) in phi.iter().enumerate() {
            if p != 0.0 {
                self.active[j] = true;
            }
            self.block.push(s * p);
        }
        self.block_rhs.push(s * y);
        self.total_weight += weight;
        self.rows += 1;
        if self.block_rhs.len() == BLOCK_ROWS {
            self.flush();
        }
    }

    fn flush(&mut self) {
        let b = self.block_rhs.len();
        if b == 0 {
            return;
        }
        let top = self.r.nrows();
        let mut stacked = DMatrix::zeros(top + b, self.dim);
        stacked.rows_mut(0, top).copy_from(&self.r);
        stacked
            .rows_mut(top, b)
            .copy_from(&DMatrix::from_row_slice(b, self.dim, &self.block));
        let mut rhs = DVector::zeros(top + b);
        rhs.rows_mut(0, top).copy_from(&self.qty);
        rhs.rows_mut(top, b).copy_from(&DVector::from_column_slice(&self.block_rhs));

        let qr = stacked.qr();
        qr.q_tr_mul(&mut rhs);
        let keep = (top + b).min(self.dim);
        self.r = qr.r().rows(0, keep).into_owned();
        self.qty = rhs.rows(0, keep).into_owned();
        self.block.clear();
        self.block_rhs.clear();
    }

    /// Folds another accumulator over the same columns into this one.
    pub fn merge(mut self, mut other: Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        self.flush();
        other.flush();
        for i in 0..other.r.nrows() {
            self.block.extend(other.r.row(i).iter());
            self.block_rhs.push(other.qty[i]);
        }
        for (a, b) in self.active.iter_mut().zip(&other.active) {
            *a |= *b;
        }
        self.total_weight += other.total_weight;
        self.rows += other.rows;
        self.flush();
        self
    }

    /// Solves the accumulated problem, optionally with a ridge term
    /// `ridge * |beta|^2` on the active coefficients.
    pub fn solve(mut self, ridge: f64) -> Result<Vec<f64>> {
        if self.rows == 0 {
            return Err(Error::SingularSystem("all sample weights are zero".into()));
        }
        if ridge > 0.0 {
            let s = ridge.sqrt();
            for j in 0..self.dim {
                if self.active[j] {
                    let mut row = vec![0.0; self.dim];
                    row[j] = s;
                    self.block.extend_from_slice(&row);
                    self.block_rhs.push(0.0);
                }
            }
        }
        self.flush();

        let mut cols: Vec<usize> = (0..self.dim).filter(|&j| self.active[j]).collect();
        // Drop, in index order, every column lying in the span of the columns
        // before it and re-factor; the result is the basic solution using the
        // lowest-index independent columns.
        let (r, rhs) = loop {
            let m = cols.len();
            let reduced = DMatrix::from_fn(self.r.nrows(), m, |i, j| self.r[(i, cols[j])]);
            let norms: Vec<f64> = (0..m).map(|j| reduced.column(j).norm()).collect();
            let mut rhs = self.qty.clone();
            let qr = reduced.qr();
            qr.q_tr_mul(&mut rhs);
            let r = qr.r();
            let dependent = (0..m).find(|&i| i >= r.nrows() || !(r[(i, i)].abs() > RANK_TOL * norms[i]));
            match dependent {
                Some(i) => {
                    cols.remove(i);
                    if cols.is_empty() {
                        return Err(Error::SingularSystem("no independent columns".into()));
                    }
                }
                None => break (r, rhs),
            }
        };
        let m = cols.len();
        let r_sq = r.view((0, 0), (m, m)).into_owned();
        let rhs_m = rhs.rows(0, m).into_owned();
        let sol = r_sq
            .solve_upper_triangular(&rhs_m)
            .ok_or_else(|| Error::SingularSystem("triangular solve failed".into()))?;
        let mut beta = vec![0.0; self.dim];
        for (j, &c) in cols.iter().enumerate() {
            beta[c] = sol[j];
        }
        Ok(beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_dense_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (n, m) = (1500, 6);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();

        let mut wls = WeightedLeastSquares::new(m);
        for i in 0..n {
            wls.push(&x[i], y[i], w[i]);
        }
        let beta = wls.solve(0.0).unwrap();

        let mut ata = DMatrix::<f64>::zeros(m, m);
        let mut aty = DVector::<f64>::zeros(m);
        for i in 0..n {
            for a in 0..m {
                aty[a] += w[i] * x[i][a] * y[i];
                for b in 0..m {
                    ata[(a, b)] += w[i] * x[i][a] * x[i][b];
                }
            }
        }
        let oracle = ata.lu().solve(&aty).unwrap();
        for j in 0..m {
            assert!((beta[j] - oracle[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn merged_parts_match_single_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<([f64; 4], f64, f64)> = (0..1500)
            .map(|_| {
                let phi = [1.0, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                (phi, rng.random_range(-2.0..2.0), rng.random_range(0.0..1.0))
            })
            .collect();
        let mut whole = WeightedLeastSquares::new(4);
        for (phi, y, w) in &rows {
            whole.push(phi, *y, *w);
        }
        let parts = rows.chunks(700).map(|chunk| {
            let mut part = WeightedLeastSquares::new(4);
            for (phi, y, w) in chunk {
                part.push(phi, *y, *w);
            }
            part
        });
        let merged = parts.reduce(WeightedLeastSquares::merge).unwrap();
        assert!((merged.total_weight() - whole.total_weight()).abs() < 1e-9);
        let (a, b) = (whole.solve(0.0).unwrap(), merged.solve(0.0).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_columns_are_pinned() {
        let mut wls = WeightedLeastSquares::new(3);
        for i in 0..10 {
            let t = i as f64;
            wls.push(&[1.0, 0.0, t], 2.0 + 3.0 * t, 1.0);
        }
        let beta = wls.solve(0.0).unwrap();
        assert!((beta[0] - 2.0).abs() < 1e-12);
        assert_eq!(beta[1], 0.0);
        assert!((beta[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dependent_columns_are_pinned() {
        let mut wls = WeightedLeastSquares::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let (a, b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            // Third column is a + 2b, the fourth a duplicate of the first.
            wls.push(&[a, b, a + 2.0 * b, a], 4.0 * a - b, 1.0);
        }
        let beta = wls.solve(0.0).unwrap();
        assert!((beta[0] - 4.0).abs() < 1e-10);
        assert!((beta[1] + 1.0).abs() < 1e-10);
        assert_eq!((beta[2], beta[3]), (0.0, 0.0));
    }

    #[test]
    fn no_weight_is_singular() {
        let mut wls = WeightedLeastSquares::new(2);
        wls.push(&[1.0, 2.0], 1.0, 0.0);
        assert!(wls.solve(1e-8).is_err());
    }
}
