//! Dense linear-algebra helpers shared by the numerical modules.
//!
//! Real coordinates on `C^n` follow `(q, p) <-> q + i p`: a complex matrix
//! `A + iB` acts on `(q, p)` as the real block matrix `[[A, -B], [B, A]]`, and
//! multiplication by `i` is the complex structure `J0 = [[0, -I], [I, 0]]`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// The complex structure on `R^{2n}` (multiplication by `i`).
pub fn j0(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = -1.0;
        j[(n + k, k)] = 1.0;
    }
    j
}

/// Real `2n x 2n` form of a complex `n x n` matrix.
pub fn realify(m: &DMatrix<C64>) -> DMatrix<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for k in 0..n {
            let z = m[(i, k)];
            r[(i, k)] = z.re;
            r[(i, n + k)] = -z.im;
            r[(n + i, k)] = z.im;
            r[(n + i, n + k)] = z.re;
        }
    }
    r
}

/// Real coordinates `(q, p)` of a complex vector.
pub fn realify_vec(v: &[C64]) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; 2 * n];
    for (k, z) in v.iter().enumerate() {
        out[k] = z.re;
        out[n + k] = z.im;
    }
    out
}

/// Block-diagonal sum of two square matrices.
pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut m = DMatrix::zeros(na + nb, na + nb);
    m.view_mut((0, 0), (na, na)).copy_from(a);
    m.view_mut((na, na), (nb, nb)).copy_from(b);
    m
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Orthonormal basis of the column span; fails if the columns are
/// numerically dependent.
pub fn orthonormalize(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = m.ncols();
    if k == 0 {
        return Ok(m.clone());
    }
    let scale = m.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut q = m.clone();
    // Two passes of modified Gram-Schmidt.
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).clone_owned();
                q.column_mut(j).axpy(-proj, &qi, 1.0);
            }
        }
        let nrm = q.column(j).norm();
        if nrm <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "column {j} is numerically dependent on its predecessors"
            )));
        }
        q.column_mut(j).scale_mut(1.0 / nrm);
    }
    Ok(q)
}

/// Principal angles (ascending) between the spans of two orthonormal frames.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let m = a.transpose() * b;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m
        .singular_values()
        .iter()
        .map(|&x| x.clamp(-1.0, 1.0).acos())
        .collect();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    s
}

/// Largest principal angle, or `pi/2` when the dimensions differ.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    principal_angles(a, b).into_iter().fold(0.0, f64::max)
}

/// Seeded standard-normal-ish matrix (uniform in [-1, 1]; only used to start
/// iterations, so the distribution does not matter).
pub fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn dvec(v: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(v)
}

/// Symmetric positive (semi)definite block-tridiagonal matrix.
///
/// `diag[i]` is block `(i, i)`; `sub[i]` is block `(i + 1, i)`.
#[derive(Clone, Debug)]
pub struct BlockTridiagonal {
    pub diag: Vec<DMatrix<f64>>,
    pub sub: Vec<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.iter().map(|d| d.nrows()).sum()
    }

    pub fn max_diag(&self) -> f64 {
        self.diag
            .iter()
            .flat_map(|d| (0..d.nrows()).map(move |i| d[(i, i)]))
            .fold(0.0, f64::max)
    }

    /// Cholesky factorization of `self + shift * I`.
    pub fn cholesky(&self, shift: f64) -> Result<BlockCholesky> {
        let nb = self.diag.len();
        let mut lower: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
        let mut coupling: Vec<DMatrix<f64>> = Vec::with_capacity(nb.saturating_sub(1));
        for i in 0..nb {
            let mut d = self.diag[i].clone();
            for k in 0..d.nrows() {
                d[(k, k)] += shift;
            }
            if i > 0 {
                // C = S L^{-T}  <=>  L C^T = S^T
                let mut ct = self.sub[i - 1].transpose();
                if !lower[i - 1].solve_lower_triangular_mut(&mut ct) {
                    return Err(Error::Numerical("singular pivot block".into()));
                }
                let c = ct.transpose();
                d -= &c * &ct;
                coupling.push(c);
            }
            let chol = nalgebra::linalg::Cholesky::new(d).ok_or_else(|| {
                Error::Numerical(format!("block {i} is not positive definite"))
            })?;
            lower.push(chol.unpack());
        }
        Ok(BlockCholesky { lower, coupling })
    }
}

#[derive(Clone, Debug)]
pub struct BlockCholesky {
    lower: Vec<DMatrix<f64>>,
    coupling: Vec<DMatrix<f64>>,
}

impl BlockCholesky {
    /// Solves `(M + shift I) X = B` in place for a block of right-hand sides.
    pub fn solve_mut(&self, b: &mut DMatrix<f64>) {
        let offsets: Vec<usize> = self
            .lower
            .iter()
            .scan(0, |acc, l| {
                let o = *acc;
                *acc += l.nrows();
                Some(o)
            })
            .collect();
        let nb = self.lower.len();
        let k = b.ncols();
        // forward
        for i in 0..nb {
            let (o, sz) = (offsets[i], self.lower[i].nrows());
            let mut rhs = b.view((o, 0), (sz, k)).clone_owned();
            if i > 0 {
                let prev = b.view((offsets[i - 1], 0), (self.lower[i - 1].nrows(), k));
                rhs -= &self.coupling[i - 1] * prev;
            }
            self.lower[i].solve_lower_triangular_mut(&mut rhs);
            b.view_mut((o, 0), (sz, k)).copy_from(&rhs);
        }
        // backward
        for i in (0..nb).rev() {
            let (o, sz) = (offsets[i], self.lower[i].nrows());
            let mut rhs = b.view((o, 0), (sz, k)).clone_owned();
            if i + 1 < nb {
                let next = b.view((offsets[i + 1], 0), (self.lower[i + 1].nrows(), k));
                rhs -= self.coupling[i].transpose() * next;
            }
            self.lower[i].tr_solve_lower_triangular_mut(&mut rhs);
            b.view_mut((o, 0), (sz, k)).copy_from(&rhs);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realify_is_a_ring_homomorphism() {
        let a = DMatrix::from_fn(3, 3, |i, k| C64::new(i as f64 - 0.5 * k as f64, (i * k) as f64 * 0.3));
        let b = DMatrix::from_fn(3, 3, |i, k| C64::new((i + k) as f64 * 0.2, 1.0 - k as f64));
        let lhs = realify(&(&a * &b));
        let rhs = realify(&a) * realify(&b);
        assert!(max_abs(&(lhs - rhs)) < 1e-12);
        let i = DMatrix::from_diagonal_element(3, 3, C64::new(0.0, 1.0));
        assert_eq!(realify(&i), j0(3));
    }

    #[test]
    fn block_cholesky_matches_dense_solve() {
        let sizes = [2usize, 3, 3, 1];
        let n: usize = sizes.iter().sum();
        let g = seeded_matrix(n + 2, n, 7);
        let dense = g.transpose() * &g;
        let mut offs = vec![0];
        for s in sizes {
            offs.push(offs.last().unwrap() + s);
        }
        // zero out everything outside the block tridiagonal band
        let mut banded = dense.clone();
        for bi in 0..sizes.len() {
            for bj in 0..sizes.len() {
                if (bi as i64 - bj as i64).abs() > 1 {
                    for i in offs[bi]..offs[bi + 1] {
                        for j in offs[bj]..offs[bj + 1] {
                            banded[(i, j)] = 0.0;
                        }
                    }
                }
            }
        }
        let bt = BlockTridiagonal {
            diag: (0..sizes.len())
                .map(|b| banded.view((offs[b], offs[b]), (sizes[b], sizes[b])).clone_owned())
                .collect(),
            sub: (0..sizes.len() - 1)
                .map(|b| {
                    banded
                        .view((offs[b + 1], offs[b]), (sizes[b + 1], sizes[b]))
                        .clone_owned()
                })
                .collect(),
        };
        let shift = 0.5;
        let mut shifted = banded.clone();
        for i in 0..n {
            shifted[(i, i)] += shift;
        }
        let rhs = seeded_matrix(n, 2, 3);
        let mut x = rhs.clone();
        bt.cholesky(shift).unwrap().solve_mut(&mut x);
        assert!(max_abs(&(&shifted * &x - &rhs)) < 1e-10);
    }

    #[test]
    fn principal_angles_of_rotated_planes() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let th: f64 = 0.3;
        let b = DMatrix::from_column_slice(3, 1, &[th.cos(), th.sin(), 0.0]);
        let ang = principal_angles(&a, &b);
        assert!((ang[0] - th).abs() < 1e-12);
    }
}
