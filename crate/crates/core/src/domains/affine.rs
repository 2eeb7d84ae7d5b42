use crate::jet::{Jet, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Complex affine map `w = M z + b` on `C^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// Row-major `n x n` matrix.
    matrix: Vec<C64>,
    shift: Vec<C64>,
    n: usize,
}

impl AffineMap {
    pub fn new(matrix: Vec<C64>, shift: Vec<C64>) -> Self {
        let n = shift.len();
        assert_eq!(matrix.len(), n * n, "matrix must be n x n");
        Self { matrix, shift, n }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            m[i * n + i] = C64::new(1.0, 0.0);
        }
        Self::new(m, vec![C64::new(0.0, 0.0); n])
    }

    /// `w_k = (z_k - center_k) * scale_k`.
    pub fn diagonal_about(center: &[C64], scale: &[C64]) -> Self {
        let n = center.len();
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        let mut b = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            m[k * n + k] = scale[k];
            b[k] = -center[k] * scale[k];
        }
        Self::new(m, b)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.matrix[i * self.n + j]
    }

    pub fn shift(&self) -> &[C64] {
        &self.shift
    }

    pub fn apply(&self, z: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.entry(i, j) * z[j]).sum::<C64>() + self.shift[i])
            .collect()
    }

    /// Linear part applied to a tangent vector.
    pub fn apply_linear(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.entry(i, j) * v[j]).sum()).collect()
    }

    fn as_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.n, self.n, &self.matrix)
    }

    pub fn det(&self) -> C64 {
        self.as_matrix().determinant()
    }

    pub fn inverse(&self) -> AffineMap {
        let inv = self.as_matrix().try_inverse().expect("affine map must be invertible");
        let b = DVector::from_column_slice(&self.shift);
        let nb = -(&inv * b);
        let mut rows = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                rows.push(inv[(i, j)]);
            }
        }
        AffineMap::new(rows, nb.iter().copied().collect())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        let m = self.as_matrix() * other.as_matrix();
        let b = self.apply(&other.shift);
        let mut rows = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                rows.push(m[(i, j)]);
            }
        }
        AffineMap::new(rows, b)
    }

    /// Real `2n x 2n` matrix of the linear part in interleaved `(Re, Im)` coordinates.
    pub fn real_linear(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut r = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let m = self.entry(i, j);
                r[(2 * i, 2 * j)] = m.re;
                r[(2 * i, 2 * j + 1)] = -m.im;
                r[(2 * i + 1, 2 * j)] = m.im;
                r[(2 * i + 1, 2 * j + 1)] = m.re;
            }
        }
        r
    }

    /// Image of jets in the holomorphic variables.
    pub fn apply_jets(&self, z: &[Jet]) -> Vec<Jet> {
        (0..self.n)
            .map(|i| {
                let mut acc = Jet::constant(z[0].nvars(), self.shift[i]);
                for j in 0..self.n {
                    let m = self.entry(i, j);
                    if m != C64::new(0.0, 0.0) {
                        acc += z[j].scale(m);
                    }
                }
                acc
            })
            .collect()
    }

    /// Image of jets in the anti-holomorphic variables `ζ = conj(z)`:
    /// `conj(M z + b) = conj(M) ζ + conj(b)`.
    pub fn apply_conj_jets(&self, zeta: &[Jet]) -> Vec<Jet> {
        (0..self.n)
            .map(|i| {
                let mut acc = Jet::constant(zeta[0].nvars(), self.shift[i].conj());
                for j in 0..self.n {
                    let m = self.entry(i, j).conj();
                    if m != C64::new(0.0, 0.0) {
                        acc += zeta[j].scale(m);
                    }
                }
                acc
            })
            .collect()
    }
}
