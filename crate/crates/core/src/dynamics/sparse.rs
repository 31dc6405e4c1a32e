//! Compressed-row kernels for the small, very sparse composite operators.

use nalgebra::DMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative threshold below which basis-transformed matrix elements are
/// treated as structural zeros.
const DROP_RELATIVE: f64 = 1e-14;

pub(crate) fn relative_drop(m: &DMatrix<Complex64>) -> f64 {
    DROP_RELATIVE * m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sparsity pattern shared by one or more value arrays.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Pattern {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl Pattern {
    /// Union of the nonzero patterns of `mats`, entries with modulus at most
    /// `drop_below` counted as zero.
    fn union(mats: &[&DMatrix<Complex64>], drop_below: f64) -> Self {
        let n = mats[0].nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                if mats.iter().any(|m| m[(i, j)].norm() > drop_below) {
                    cols.push(j);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    fn gather(&self, m: &DMatrix<Complex64>) -> Vec<Complex64> {
        let mut vals = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for &j in &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]] {
                vals.push(m[(i, j)]);
            }
        }
        vals
    }

    /// `y = A x` for vectors.
    pub fn matvec(&self, vals: &[Complex64], x: &[Complex64], y: &mut [Complex64]) {
        for i in 0..self.n {
            let mut acc = ZERO;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += vals[p] * x[self.cols[p]];
            }
            y[i] = acc;
        }
    }

    /// `Y = A X` with `X`, `Y` square row-major.
    pub fn mul_dense(&self, vals: &[Complex64], x: &[Complex64], y: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let row = &mut y[i * n..(i + 1) * n];
            row.fill(ZERO);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = vals[p];
                let src = &x[self.cols[p] * n..(self.cols[p] + 1) * n];
                for (r, s) in row.iter_mut().zip(src) {
                    *r += v * s;
                }
            }
        }
    }

    /// `Z += A Y†` with `Y`, `Z` square row-major.
    pub fn add_mul_adjoint(&self, vals: &[Complex64], y: &[Complex64], z: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = vals[p];
                let k = self.cols[p];
                let row = &mut z[i * n..(i + 1) * n];
                for (j, r) in row.iter_mut().enumerate() {
                    *r += v * y[j * n + k].conj();
                }
            }
        }
    }
}

/// A fixed sparse matrix.
#[derive(Debug, Clone)]
pub(crate) struct Csr {
    pub pattern: Pattern,
    pub vals: Vec<Complex64>,
}

impl Csr {
    pub fn from_dense(m: &DMatrix<Complex64>, drop_below: f64) -> Self {
        let pattern = Pattern::union(&[m], drop_below);
        let vals = pattern.gather(m);
        Self { pattern, vals }
    }

    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.pattern.matvec(&self.vals, x, y);
    }

    /// `y += alpha A x`.
    pub fn add_matvec(&self, alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        let p = &self.pattern;
        for (i, yi) in y.iter_mut().enumerate().take(p.n) {
            let mut acc = ZERO;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += self.vals[k] * x[p.cols[k]];
            }
            *yi += alpha * acc;
        }
    }

    pub fn mul_dense(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.pattern.mul_dense(&self.vals, x, y);
    }

    pub fn add_mul_adjoint(&self, y: &[Complex64], z: &mut [Complex64]) {
        self.pattern.add_mul_adjoint(&self.vals, y, z);
    }
}

/// `A(t) = A_0 + c(t) A_+ + c(t)* A_-` on a shared pattern.
#[derive(Debug, Clone)]
pub(crate) struct DrivenCsr {
    pub pattern: Pattern,
    base: Vec<Complex64>,
    raise: Vec<Complex64>,
    lower: Vec<Complex64>,
}

impl DrivenCsr {
    pub fn new(
        base: &DMatrix<Complex64>,
        raise: &DMatrix<Complex64>,
        lower: &DMatrix<Complex64>,
        drop_below: f64,
    ) -> Self {
        let pattern = Pattern::union(&[base, raise, lower], drop_below);
        Self {
            base: pattern.gather(base),
            raise: pattern.gather(raise),
            lower: pattern.gather(lower),
            pattern,
        }
    }

    /// Values of `A(t)` for drive coefficient `c`.
    pub fn assemble(&self, c: Complex64, vals: &mut Vec<Complex64>) {
        vals.clear();
        if c == ZERO {
            vals.extend_from_slice(&self.base);
            return;
        }
        let cc = c.conj();
        vals.extend(
            self.base
                .iter()
                .zip(&self.raise)
                .zip(&self.lower)
                .map(|((b, r), l)| b + c * r + cc * l),
        );
    }

    /// `y = A(t) x` without materializing the values.
    pub fn matvec(&self, c: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        let p = &self.pattern;
        let cc = c.conj();
        for i in 0..p.n {
            let mut acc = ZERO;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += (self.base[k] + c * self.raise[k] + cc * self.lower[k]) * x[p.cols[k]];
            }
            y[i] = acc;
        }
    }

    #[cfg(test)]
    pub fn base_dense(&self) -> DMatrix<Complex64> {
        let n = self.pattern.n;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for p in self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1] {
                m[(i, self.pattern.cols[p])] = self.base[p];
            }
        }
        m
    }
}
