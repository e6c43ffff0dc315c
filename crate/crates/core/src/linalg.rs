//! Small dense linear algebra used by the bound machinery.
//!
//! Everything here targets matrices of side `m <= n` where `n` is the agent
//! count, i.e. at most a few dozen rows. Determinants and inverses go through
//! an LU factorization with partial pivoting; there is no cofactor expansion.

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>, // row-major
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds an `n x m` matrix whose j-th column is `columns[j]`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        assert!(cols > 0, "matrix needs at least one column");
        let rows = columns[0].len();
        let mut m = Matrix::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "ragged column lengths");
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.at(i, j)).collect()
    }

    pub fn with_column(&self, j: usize, col: &[f64]) -> Matrix {
        assert_eq!(col.len(), self.rows);
        let mut m = self.clone();
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v);
        }
        m
    }

    /// Product of column Euclidean norms; by Hadamard's inequality an upper
    /// bound on `|det|`, used to scale determinant tolerances.
    pub fn hadamard_scale(&self) -> f64 {
        let mut s = 1.0f64;
        for j in 0..self.cols {
            let norm: f64 = (0..self.rows)
                .map(|i| self.at(i, j) * self.at(i, j))
                .sum::<f64>()
                .sqrt();
            s *= norm.max(1e-300);
        }
        s
    }

    /// LU factorization with partial pivoting. Returns `None` when a pivot is
    /// exactly zero after pivoting (structurally singular input).
    pub fn lu(&self) -> Option<Lu> {
        assert_eq!(self.rows, self.cols, "lu requires a square matrix");
        let n = self.rows;
        let mut f = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = f.at(k, k).abs();
            for r in (k + 1)..n {
                let v = f.at(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return None;
            }
            if p != k {
                for c in 0..n {
                    let tmp = f.at(k, c);
                    f.set(k, c, f.at(p, c));
                    f.set(p, c, tmp);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = f.at(k, k);
            for r in (k + 1)..n {
                let factor = f.at(r, k) / pivot;
                f.set(r, k, factor);
                if factor != 0.0 {
                    for c in (k + 1)..n {
                        let v = f.at(r, c) - factor * f.at(k, c);
                        f.set(r, c, v);
                    }
                }
            }
        }
        Some(Lu { f, perm, sign })
    }

    /// Determinant via LU; zero for structurally singular matrices.
    pub fn det(&self) -> f64 {
        match self.lu() {
            Some(lu) => lu.det(),
            None => 0.0,
        }
    }

    pub fn inverse(&self) -> Option<Matrix> {
        let lu = self.lu()?;
        let n = self.rows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = lu.solve(&e);
            e[j] = 0.0;
            for i in 0..n {
                inv.set(i, j, col[i]);
            }
        }
        Some(inv)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * v[j]).sum())
            .collect()
    }
}

pub struct Lu {
    f: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn det(&self) -> f64 {
        let n = self.f.rows();
        let mut d = self.sign;
        for k in 0..n {
            d *= self.f.at(k, k);
        }
        d
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.f.rows();
        assert_eq!(b.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = b[self.perm[i]];
            for j in 0..i {
                v -= self.f.at(i, j) * y[j];
            }
            y[i] = v;
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for j in (i + 1)..n {
                v -= self.f.at(i, j) * y[j];
            }
            y[i] = v / self.f.at(i, i);
        }
        y
    }
}

/// Plain Gaussian elimination with partial pivoting on an augmented system.
/// Kept separate from [`Matrix::lu`] so callers can cross-check one solve
/// route against the other.
pub fn gauss_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.rows(), a.cols());
    assert_eq!(b.len(), a.rows());
    let n = a.rows();
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let mut p = k;
        let mut best = m.at(k, k).abs();
        for r in (k + 1)..n {
            if m.at(r, k).abs() > best {
                best = m.at(r, k).abs();
                p = r;
            }
        }
        if best == 0.0 {
            return None;
        }
        if p != k {
            for c in 0..n {
                let tmp = m.at(k, c);
                m.set(k, c, m.at(p, c));
                m.set(p, c, tmp);
            }
            rhs.swap(k, p);
        }
        for r in (k + 1)..n {
            let factor = m.at(r, k) / m.at(k, k);
            if factor != 0.0 {
                for c in k..n {
                    let v = m.at(r, c) - factor * m.at(k, c);
                    m.set(r, c, v);
                }
                rhs[r] -= factor * rhs[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = rhs[i];
        for j in (i + 1)..n {
            v -= m.at(i, j) * x[j];
        }
        x[i] = v / m.at(i, i);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_identity_and_swap() {
        assert_eq!(Matrix::identity(3).det(), 1.0);
        let m = Matrix::from_columns(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(m.det(), -1.0);
    }

    #[test]
    fn det_matches_cofactor_3x3() {
        let m = Matrix::from_columns(&[
            vec![2.0, -1.0, 0.5],
            vec![0.3, 4.0, 1.0],
            vec![-1.0, 0.2, 3.0],
        ]);
        // cofactor expansion along the first row
        let a = m.at(0, 0) * (m.at(1, 1) * m.at(2, 2) - m.at(1, 2) * m.at(2, 1));
        let b = m.at(0, 1) * (m.at(1, 0) * m.at(2, 2) - m.at(1, 2) * m.at(2, 0));
        let c = m.at(0, 2) * (m.at(1, 0) * m.at(2, 1) - m.at(1, 1) * m.at(2, 0));
        assert!((m.det() - (a - b + c)).abs() < 1e-12);
    }

    #[test]
    fn solve_and_inverse_agree() {
        let m = Matrix::from_columns(&[
            vec![3.0, 1.0, 0.0],
            vec![1.0, 2.0, 0.5],
            vec![0.0, 1.0, 4.0],
        ]);
        let b = vec![1.0, -2.0, 0.5];
        let x1 = m.lu().unwrap().solve(&b);
        let x2 = gauss_solve(&m, &b).unwrap();
        let inv = m.inverse().unwrap();
        let x3 = inv.mul_vec(&b);
        for i in 0..3 {
            assert!((x1[i] - x2[i]).abs() < 1e-12);
            assert!((x1[i] - x3[i]).abs() < 1e-12);
            let r: f64 = (0..3).map(|j| m.at(i, j) * x1[j]).sum();
            assert!((r - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_reports_none() {
        let m = Matrix::from_columns(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(m.lu().is_none() || m.det().abs() < 1e-15);
        assert_eq!(m.det(), 0.0);
    }
}
