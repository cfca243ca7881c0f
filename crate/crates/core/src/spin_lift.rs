//! Loops in `SO(n)`: winding numbers for `n = 2` and liftability to a closed
//! loop in `Spin(n)`.
//!
//! For `n >= 3` the loop is lifted step by step: each increment
//! `R_{i+1} R_i^T = exp(A)` is sent to `exp(1/2 sum_{i<j} A_ij g_i g_j)` in a
//! complex spinor representation of dimension `2^{floor(n/2)}` built from
//! Jordan-Wigner gamma matrices. The ordered product around the loop is `+I`
//! when the loop lifts and `-I` when it does not.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, C64};

/// Orthogonality and determinant tolerance for samples.
pub const SAMPLE_TOL: f64 = 1e-10;
/// Largest spectral-norm distance allowed between consecutive samples.
pub const FINENESS: f64 = 0.5;
/// Largest allowed distance of the holonomy from `+-I`.
pub const HOLONOMY_TOL: f64 = 0.1;
pub const MAX_DIM: usize = 8;

/// A loop `t -> R(t)` in `SO(n)` sampled at `t_i = i / N`; the sample at
/// `t = 1` is implicit and equal to the first.
#[derive(Clone, Debug, PartialEq)]
pub struct SoLoop {
    n: usize,
    samples: Vec<DMatrix<f64>>,
}

impl SoLoop {
    pub fn new(samples: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = samples
            .first()
            .ok_or_else(|| Error::InvalidInput("loop needs at least one sample".into()))?
            .nrows();
        for (i, r) in samples.iter().enumerate() {
            if r.nrows() != n || r.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "sample {i} is {}x{}, expected {n}x{n}",
                    r.nrows(),
                    r.ncols()
                )));
            }
            let defect = max_abs(&(r.transpose() * r - DMatrix::<f64>::identity(n, n)));
            if defect > SAMPLE_TOL {
                return Err(Error::InvalidInput(format!(
                    "sample {i} is not orthogonal (defect {defect:.3e})"
                )));
            }
            let det = r.determinant();
            if (det - 1.0).abs() > SAMPLE_TOL {
                return Err(Error::InvalidInput(format!(
                    "sample {i} has determinant {det}"
                )));
            }
        }
        Ok(Self { n, samples })
    }

    /// Constant loop at the identity.
    pub fn constant(n: usize, samples: usize) -> Self {
        Self {
            n,
            samples: vec![DMatrix::identity(n, n); samples.max(1)],
        }
    }

    /// Rotation by `2 pi turns t` in the plane of the first two coordinates.
    pub fn planar_rotation(n: usize, turns: i64, samples: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedDimension {
                n,
                reason: "planar rotation needs n >= 2".into(),
            });
        }
        Ok(Self {
            n,
            samples: (0..samples)
                .map(|i| {
                    let a = 2.0 * PI * turns as f64 * i as f64 / samples as f64;
                    let mut r = DMatrix::identity(n, n);
                    let (sn, c) = a.sin_cos();
                    r[(0, 0)] = c;
                    r[(0, 1)] = -sn;
                    r[(1, 0)] = sn;
                    r[(1, 1)] = c;
                    r
                })
                .collect(),
        })
    }

    /// Rotation by `2 pi turns t` about `axis` in `SO(3)`.
    pub fn axis_rotation(axis: [f64; 3], turns: i64, samples: usize) -> Result<Self> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidInput("rotation axis must be nonzero".into()));
        }
        let k = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, -axis[2], axis[1], axis[2], 0.0, -axis[0], -axis[1], axis[0], 0.0],
        ) / norm;
        Ok(Self {
            n: 3,
            samples: (0..samples)
                .map(|i| (&k * (2.0 * PI * turns as f64 * i as f64 / samples as f64)).exp())
                .collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> &[DMatrix<f64>] {
        &self.samples
    }

    /// `R (+) I_extra`.
    pub fn pad(&self, extra: usize) -> Self {
        let n = self.n + extra;
        Self {
            n,
            samples: self
                .samples
                .iter()
                .map(|r| {
                    let mut m = DMatrix::identity(n, n);
                    m.view_mut((0, 0), (self.n, self.n)).copy_from(r);
                    m
                })
                .collect(),
        }
    }

    /// Left-multiplies each sample by `exp(A)` for a random skew `A` of
    /// spectral norm below `size`; homotopic to `self` while `size` is small.
    pub fn perturbed(&self, size: f64, rng: &mut impl rand::Rng) -> Self {
        let n = self.n;
        let samples = self
            .samples
            .iter()
            .map(|r| {
                let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
                let skew = &g - g.transpose();
                let norm = skew.clone().singular_values().max();
                if norm == 0.0 {
                    return r.clone();
                }
                (skew * (rng.gen_range(0.0..size) / norm)).exp() * r
            })
            .collect();
        Self { n, samples }
    }

    /// `t -> R(1 - t)`.
    pub fn reversed(&self) -> Self {
        let mut samples = vec![self.samples[0].clone()];
        samples.extend(self.samples[1..].iter().rev().cloned());
        Self { n: self.n, samples }
    }

    /// Loop product: first `self`, then `other` (both based at their first sample).
    pub fn concat(&self, other: &SoLoop) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch("loops in different SO(n)".into()));
        }
        let base = &self.samples[0];
        let shift = base * other.samples[0].transpose();
        let mut samples = self.samples.clone();
        // keep the concatenation closed and based at `base`
        samples.extend(other.samples.iter().map(|r| &shift * r));
        Ok(Self { n: self.n, samples })
    }

    /// Pointwise product `t -> R(t) Q(t)` of loops on the same grid.
    pub fn pointwise(&self, other: &SoLoop) -> Result<Self> {
        if self.n != other.n || self.samples.len() != other.samples.len() {
            return Err(Error::DimensionMismatch("loops on different grids".into()));
        }
        Ok(Self {
            n: self.n,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    fn steps(&self) -> impl Iterator<Item = (usize, &DMatrix<f64>, &DMatrix<f64>)> {
        let len = self.samples.len();
        (0..len).map(move |i| (i, &self.samples[i], &self.samples[(i + 1) % len]))
    }

    /// Fails with a refine-sampling error if two consecutive samples (including
    /// the closing step) are farther apart than [`FINENESS`].
    pub fn check_fineness(&self) -> Result<()> {
        for (i, a, b) in self.steps() {
            let d = (b - a).singular_values().max();
            if d > FINENESS {
                return Err(Error::RefineSampling(format!(
                    "samples {i} and {} are {d:.3} apart (limit {FINENESS})",
                    (i + 1) % self.samples.len()
                )));
            }
        }
        Ok(())
    }
}

/// Number of turns of a loop in `SO(2)`.
pub fn winding_number(lp: &SoLoop) -> Result<i64> {
    if lp.n != 2 {
        return Err(Error::UnsupportedDimension {
            n: lp.n,
            reason: "winding numbers are defined for SO(2)".into(),
        });
    }
    lp.check_fineness()?;
    let mut total = 0.0;
    for (_, a, b) in lp.steps() {
        let inc = b * a.transpose();
        total += inc[(1, 0)].atan2(inc[(0, 0)]);
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LiftResult {
    pub lifts: bool,
    /// Only for `n = 2`.
    pub winding: Option<i64>,
    /// Sign of the lifted holonomy (`+1` closes up).
    pub certificate: i8,
}

/// Principal logarithm of a rotation close to the identity, by the series of
/// `log(I + X)`; requires `||X||_2 <= 1/2`.
fn rotation_log(r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.nrows();
    let x = r - DMatrix::<f64>::identity(n, n);
    let mut term = x.clone();
    let mut acc = x.clone();
    for k in 2..80 {
        term = &term * &x;
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        acc += &term * (sign / k as f64);
        if term.amax() < 1e-18 {
            break;
        }
    }
    (&acc - acc.transpose()) * 0.5
}

/// Hermitian, pairwise anticommuting `g_0..g_{n-1}` with `g_i^2 = I`, of size
/// `2^{floor(n/2)}`.
pub fn gamma_matrices(n: usize) -> Vec<DMatrix<C64>> {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let x = DMatrix::from_row_slice(2, 2, &[o, l, l, o]);
    let y = DMatrix::from_row_slice(2, 2, &[o, -i, i, o]);
    let z = DMatrix::from_row_slice(2, 2, &[l, o, o, -l]);
    let id = DMatrix::<C64>::identity(2, 2);
    let k = n / 2;
    let string = |pos: usize, last: &DMatrix<C64>| {
        let mut m = DMatrix::<C64>::identity(1, 1);
        for q in 0..k {
            let f = if q < pos {
                &z
            } else if q == pos {
                last
            } else {
                &id
            };
            m = m.kronecker(f);
        }
        m
    };
    let mut out = Vec::with_capacity(n);
    for p in 0..k {
        out.push(string(p, &x));
        out.push(string(p, &y));
    }
    if n % 2 == 1 {
        out.push(string(k, &id));
    }
    out
}

/// `1/2 sum_{i<j} A_ij g_i g_j`: the spin representation of `A` in `so(n)`.
pub fn spin_generator(a: &DMatrix<f64>, gammas: &[DMatrix<C64>]) -> DMatrix<C64> {
    let n = a.nrows();
    let dim = gammas[0].nrows();
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..n {
        for j in i + 1..n {
            if a[(i, j)] != 0.0 {
                out += &gammas[i] * &gammas[j] * C64::new(0.5 * a[(i, j)], 0.0);
            }
        }
    }
    out
}

/// Whether the loop lifts to a closed loop in `Spin(n)`.
pub fn lifts_to_spin(lp: &SoLoop) -> Result<LiftResult> {
    match lp.n {
        0 | 1 => Ok(LiftResult {
            lifts: true,
            winding: None,
            certificate: 1,
        }),
        2 => {
            let w = winding_number(lp)?;
            let lifts = w.rem_euclid(2) == 0;
            Ok(LiftResult {
                lifts,
                winding: Some(w),
                certificate: if lifts { 1 } else { -1 },
            })
        }
        n if n > MAX_DIM => Err(Error::UnsupportedDimension {
            n,
            reason: format!("spinor lifting is capped at n = {MAX_DIM}"),
        }),
        _ => {
            lp.check_fineness()?;
            let sign = holonomy_sign(lp)?;
            Ok(LiftResult {
                lifts: sign > 0,
                winding: None,
                certificate: sign,
            })
        }
    }
}

fn holonomy_sign(lp: &SoLoop) -> Result<i8> {
    let gammas = gamma_matrices(lp.n);
    let dim = gammas[0].nrows();
    let mut h = DMatrix::<C64>::identity(dim, dim);
    for (_, a, b) in lp.steps() {
        let gen = spin_generator(&rotation_log(&(b * a.transpose())), &gammas);
        h = gen.exp() * h;
    }
    let id = DMatrix::<C64>::identity(dim, dim);
    let dist = |m: DMatrix<C64>| m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let plus = dist(&h - &id);
    let minus = dist(&h + &id);
    if plus <= HOLONOMY_TOL {
        Ok(1)
    } else if minus <= HOLONOMY_TOL {
        Ok(-1)
    } else {
        Err(Error::RefineSampling(format!(
            "lifted holonomy is {:.3} from +I and {:.3} from -I",
            plus, minus
        )))
    }
}

/// `+1` if the loop lifts to `Spin(n)`, `-1` otherwise.
pub fn delta_sign(lp: &SoLoop) -> Result<i8> {
    Ok(if lifts_to_spin(lp)?.lifts { 1 } else { -1 })
}
