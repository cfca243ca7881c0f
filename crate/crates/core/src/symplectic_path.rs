//! Symplectic paths generated by periodic symmetric loops, and their
//! Conley-Zehnder indices.
//!
//! The index is computed as the Maslov index of the graph `Gr(gamma(t))`
//! relative to the diagonal in `(R^2n x R^2n, -omega + omega)`. The graph is
//! mapped to a unitary frame, and the crossing count is read off from a
//! continuous lift of `arg det` of the Souriau map plus the eigenvalue angles
//! at the endpoint. Only the lift of a determinant is tracked, so the count
//! does not depend on following individual eigenvalue branches.
//!
//! The sign convention is pinned by requiring `index(D_S^+) = -mu_CZ(gamma)`
//! for the half-cylinder operators of [`crate::cr_operator`]; this makes the
//! path `exp(-pi t J0)` (from `S = -pi I`) have index `-1`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{j0, max_abs, orthonormalize, C64};

/// Symmetry tolerance for loop samples (max-norm).
pub const SYMMETRY_TOL: f64 = 1e-12;
/// `|det(gamma(1)/||gamma(1)|| - I)|` must exceed this for nondegeneracy.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;
/// Minimum number of integration steps.
pub const MIN_STEPS: usize = 16;

/// Orientation of the raw Maslov count relative to the operator-index
/// convention. Fixed by the calibration test `anchor_minus_pi_has_index_minus_one`.
const CALIBRATION_SIGN: i64 = 1;

/// A loop `t -> S(t)` of symmetric `2n x 2n` matrices with period 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricLoop {
    n: usize,
    data: LoopData,
}

#[derive(Clone, Debug, PartialEq)]
enum LoopData {
    Constant(DMatrix<f64>),
    /// Uniform samples at `t_i = i / N`, interpolated linearly and periodically.
    Sampled(Vec<DMatrix<f64>>),
}

fn check_symmetric(m: &DMatrix<f64>, n: usize, sample: usize) -> Result<()> {
    if m.nrows() != 2 * n || m.ncols() != 2 * n {
        return Err(Error::DimensionMismatch(format!(
            "sample {sample} is {}x{}, expected {}x{}",
            m.nrows(),
            m.ncols(),
            2 * n,
            2 * n
        )));
    }
    let defect = max_abs(&(m - m.transpose()));
    if defect > SYMMETRY_TOL {
        return Err(Error::NonSymmetric { sample, defect });
    }
    Ok(())
}

impl SymmetricLoop {
    pub fn constant(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.nrows().is_multiple_of(2) || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "loop matrices must be 2n x 2n, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let n = matrix.nrows() / 2;
        check_symmetric(&matrix, n, 0)?;
        Ok(Self {
            n,
            data: LoopData::Constant(matrix),
        })
    }

    /// `S(t) = c I` in complex dimension `n`.
    pub fn scalar(n: usize, c: f64) -> Self {
        Self {
            n,
            data: LoopData::Constant(DMatrix::from_diagonal_element(2 * n, 2 * n, c)),
        }
    }

    pub fn sampled(samples: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidInput("sampled loop needs at least one sample".into()))?;
        if first.nrows() % 2 != 0 || first.nrows() == 0 {
            return Err(Error::DimensionMismatch("loop matrices must be 2n x 2n".into()));
        }
        let n = first.nrows() / 2;
        for (i, m) in samples.iter().enumerate() {
            check_symmetric(m, n, i)?;
        }
        Ok(Self {
            n,
            data: LoopData::Sampled(samples),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.data, LoopData::Constant(_))
    }

    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        match &self.data {
            LoopData::Constant(m) => m.clone(),
            LoopData::Sampled(s) => {
                let len = s.len();
                let x = t.rem_euclid(1.0) * len as f64;
                let i = (x.floor() as usize).min(len - 1);
                let w = x - i as f64;
                &s[i] * (1.0 - w) + &s[(i + 1) % len] * w
            }
        }
    }

    /// Loop on `C^{n1} (+) C^{n2}` acting blockwise.
    pub fn direct_sum(&self, other: &SymmetricLoop) -> SymmetricLoop {
        let (n1, n2) = (self.n, other.n);
        match (&self.data, &other.data) {
            (LoopData::Constant(a), LoopData::Constant(b)) => SymmetricLoop {
                n: n1 + n2,
                data: LoopData::Constant(complex_direct_sum(a, b)),
            },
            _ => {
                let count = self.sample_count().max(other.sample_count());
                let samples = (0..count)
                    .map(|i| {
                        let t = i as f64 / count as f64;
                        complex_direct_sum(&self.eval(t), &other.eval(t))
                    })
                    .collect();
                SymmetricLoop {
                    n: n1 + n2,
                    data: LoopData::Sampled(samples),
                }
            }
        }
    }

    fn sample_count(&self) -> usize {
        match &self.data {
            LoopData::Constant(_) => 1,
            LoopData::Sampled(s) => s.len(),
        }
    }
}

/// Direct sum of real `(q, p)`-ordered matrices: `C^{n1} (+) C^{n2}` with
/// coordinates `(q1, q2, p1, p2)`.
pub fn complex_direct_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n1, n2) = (a.nrows() / 2, b.nrows() / 2);
    let n = n1 + n2;
    let idx_a = |i: usize| if i < n1 { i } else { n + (i - n1) };
    let idx_b = |i: usize| if i < n2 { n1 + i } else { n + n1 + (i - n2) };
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..2 * n1 {
        for k in 0..2 * n1 {
            m[(idx_a(i), idx_a(k))] = a[(i, k)];
        }
    }
    for i in 0..2 * n2 {
        for k in 0..2 * n2 {
            m[(idx_b(i), idx_b(k))] = b[(i, k)];
        }
    }
    m
}

/// Samples `gamma(t_i)` on the uniform grid `t_i = i / steps`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticPath {
    n: usize,
    samples: Vec<DMatrix<f64>>,
}

impl SymplecticPath {
    /// Wraps externally computed samples; the first must be the identity.
    pub fn from_samples(samples: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidInput("empty path".into()))?;
        let dim = first.nrows();
        if dim % 2 != 0 || samples.len() < 2 {
            return Err(Error::InvalidInput("path needs >= 2 samples of 2n x 2n matrices".into()));
        }
        if max_abs(&(first - DMatrix::identity(dim, dim))) > 0.0 {
            return Err(Error::InvalidInput("path must start at the identity".into()));
        }
        Ok(Self {
            n: dim / 2,
            samples,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> &[DMatrix<f64>] {
        &self.samples
    }

    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn endpoint(&self) -> &DMatrix<f64> {
        self.samples.last().unwrap()
    }

    /// `max_t ||gamma^T J0 gamma - J0||_max`.
    pub fn symplecticity_defect(&self) -> f64 {
        let j = j0(self.n);
        self.samples
            .iter()
            .map(|g| max_abs(&(g.transpose() * &j * g - &j)))
            .fold(0.0, f64::max)
    }

    /// Pointwise product `t -> a(t) gamma(t)` with another path on the same grid.
    pub fn left_multiply(&self, a: &SymplecticPath) -> Result<SymplecticPath> {
        if a.samples.len() != self.samples.len() || a.n != self.n {
            return Err(Error::DimensionMismatch("paths on different grids".into()));
        }
        Ok(SymplecticPath {
            n: self.n,
            samples: a
                .samples
                .iter()
                .zip(&self.samples)
                .map(|(x, y)| x * y)
                .collect(),
        })
    }
}

/// Solves `gamma' = J0 S(t) gamma`, `gamma(0) = I` with the exponential
/// midpoint rule `gamma_{k+1} = exp(h J0 S(t_k + h/2)) gamma_k`.
///
/// Each step is the exponential of a Hamiltonian matrix, so the samples are
/// symplectic up to round-off, and constant loops are integrated exactly.
pub fn integrate_symplectic_path(lp: &SymmetricLoop, steps: usize) -> Result<SymplecticPath> {
    if steps < MIN_STEPS {
        return Err(Error::ResolutionTooLow(format!(
            "steps = {steps} < {MIN_STEPS}"
        )));
    }
    let n = lp.n();
    let j = j0(n);
    let h = 1.0 / steps as f64;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut g = DMatrix::<f64>::identity(2 * n, 2 * n);
    samples.push(g.clone());
    let constant_step = lp.is_constant().then(|| (&j * lp.eval(0.0) * h).exp());
    for k in 0..steps {
        let step = match &constant_step {
            Some(e) => e.clone(),
            None => (&j * lp.eval((k as f64 + 0.5) * h) * h).exp(),
        };
        g = step * g;
        samples.push(g.clone());
    }
    Ok(SymplecticPath { n, samples })
}

/// `|det(gamma(1) - I)| / max(1, ||gamma(1)||_2)^{2n}`.
///
/// Equals `|det(gamma(1) - I)|` for orthogonal endpoints. Dividing by the norm
/// before subtracting `I` would flag every hyperbolic endpoint as degenerate.
pub fn endpoint_determinant(path: &SymplecticPath) -> f64 {
    let g = path.endpoint();
    let dim = g.nrows();
    let norm = g.clone().singular_values().max().max(1.0);
    let m = g - DMatrix::<f64>::identity(dim, dim);
    m.determinant().abs() / norm.powi(dim as i32)
}

pub fn is_nondegenerate(path: &SymplecticPath) -> bool {
    endpoint_determinant(path) > DEGENERACY_THRESHOLD
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CzConvention {
    /// Normalized by `index(D_S^+) = -mu_CZ`; `exp(-pi t J0)` has index -1.
    MinusOperatorIndex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CzIndex {
    pub value: i64,
    pub convention: CzConvention,
}

/// Unitary frame of `Gr(g)` in complex coordinates adapted to `(-J0) (+) J0`.
fn graph_frame(g: &DMatrix<f64>) -> Result<DMatrix<C64>> {
    let dim = g.nrows();
    let n = dim / 2;
    let mut b = DMatrix::<f64>::zeros(2 * dim, dim);
    b.view_mut((0, 0), (dim, dim)).fill_with_identity();
    b.view_mut((dim, 0), (dim, dim)).copy_from(g);
    let u = orthonormalize(&b)?;
    // first factor carries -J0: z = q - i p ; second factor: z = q + i p
    Ok(DMatrix::from_fn(dim, dim, |row, col| {
        if row < n {
            C64::new(u[(row, col)], -u[(n + row, col)])
        } else {
            let r = row - n;
            C64::new(u[(dim + r, col)], u[(dim + n + r, col)])
        }
    }))
}

/// Angles in `[0, 2 pi)` of the eigenvalues of a unitary matrix.
fn unitary_eigen_angles(m: &DMatrix<C64>) -> Vec<f64> {
    // A generic rotation of the Hermitian part separates eigenvalues; the
    // Rayleigh quotient of each eigenvector recovers the unitary eigenvalue.
    let beta = C64::from_polar(1.0, 0.713_417_2);
    let h = (m * beta.conj() + m.adjoint() * beta) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    eig.eigenvectors
        .column_iter()
        .map(|v| {
            let v: DVector<C64> = v.clone_owned();
            let lambda = (v.adjoint() * m * &v)[(0, 0)];
            lambda.arg().rem_euclid(2.0 * PI)
        })
        .collect()
}

/// Conley-Zehnder index of a nondegenerate path.
pub fn conley_zehnder_index(path: &SymplecticPath) -> Result<CzIndex> {
    let det = endpoint_determinant(path);
    if det <= DEGENERACY_THRESHOLD {
        return Err(Error::Degenerate { det });
    }
    let dim = 2 * path.n();
    let reference = graph_frame(&DMatrix::identity(dim, dim))?;
    let ref_adj = reference.adjoint();

    let mut lift = 0.0;
    let mut prev_arg = 0.0;
    let mut last_q = None;
    for (i, g) in path.samples().iter().enumerate() {
        let q = &ref_adj * graph_frame(g)?;
        let d = q.determinant();
        let arg = (d * d).arg();
        if i > 0 {
            let mut delta = arg - prev_arg;
            delta -= 2.0 * PI * (delta / (2.0 * PI)).round();
            if delta.abs() > 0.9 * PI {
                return Err(Error::RefineSampling(format!(
                    "determinant phase jumps by {delta:.3} between samples {} and {i}",
                    i - 1
                )));
            }
            lift += delta;
        }
        prev_arg = arg;
        last_q = Some(q);
    }
    let q = last_q.unwrap();
    let souriau = &q * q.transpose();
    let angle_sum: f64 = unitary_eigen_angles(&souriau).iter().sum();
    let winding = (lift - angle_sum) / (2.0 * PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 1e-3 {
        return Err(Error::Numerical(format!(
            "non-integral crossing count {winding}"
        )));
    }
    let raw = rounded as i64 + path.n() as i64;
    Ok(CzIndex {
        value: CALIBRATION_SIGN * raw,
        convention: CzConvention::MinusOperatorIndex,
    })
}

/// Rotation path `t -> exp(theta t J0)` in complex dimension 1.
pub fn rotation_path(theta: f64, steps: usize) -> SymplecticPath {
    let j = j0(1);
    let samples = (0..=steps)
        .map(|k| (&j * (theta * k as f64 / steps as f64)).exp())
        .collect();
    SymplecticPath { n: 1, samples }
}
