//! Unitary gauge fields `U: [0, +inf) x T -> U(n)` with closed-form first
//! derivatives, and the combinators used to build test batteries.
//!
//! Every field is the identity for `s` beyond its [`UnitaryField::support_end`].

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::analytic_oracles::{cutoff, cutoff_derivative};
use crate::error::{Error, Result};
use crate::linalg::C64;

pub trait UnitaryField: Send + Sync + std::fmt::Debug {
    fn n(&self) -> usize;
    fn value(&self, s: f64, t: f64) -> DMatrix<C64>;
    fn ds(&self, s: f64, t: f64) -> DMatrix<C64>;
    fn dt(&self, s: f64, t: f64) -> DMatrix<C64>;
    /// `U(s, .) = I` for every `s >= support_end`.
    fn support_end(&self) -> f64;
    fn label(&self) -> String;
}

pub type SharedUnitary = Arc<dyn UnitaryField>;

fn cid(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}

fn czero(n: usize) -> DMatrix<C64> {
    DMatrix::zeros(n, n)
}

#[derive(Clone, Debug)]
pub struct IdentityField {
    pub n: usize,
}

impl UnitaryField for IdentityField {
    fn n(&self) -> usize {
        self.n
    }
    fn value(&self, _: f64, _: f64) -> DMatrix<C64> {
        cid(self.n)
    }
    fn ds(&self, _: f64, _: f64) -> DMatrix<C64> {
        czero(self.n)
    }
    fn dt(&self, _: f64, _: f64) -> DMatrix<C64> {
        czero(self.n)
    }
    fn support_end(&self) -> f64 {
        0.0
    }
    fn label(&self) -> String {
        "I".into()
    }
}

/// `(s, t) -> U(s + shift, t)`.
#[derive(Clone, Debug)]
pub struct Shifted {
    pub inner: SharedUnitary,
    pub shift: f64,
}

impl UnitaryField for Shifted {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn value(&self, s: f64, t: f64) -> DMatrix<C64> {
        self.inner.value(s + self.shift, t)
    }
    fn ds(&self, s: f64, t: f64) -> DMatrix<C64> {
        self.inner.ds(s + self.shift, t)
    }
    fn dt(&self, s: f64, t: f64) -> DMatrix<C64> {
        self.inner.dt(s + self.shift, t)
    }
    fn support_end(&self) -> f64 {
        (self.inner.support_end() - self.shift).max(0.0)
    }
    fn label(&self) -> String {
        format!("{}(s+{})", self.inner.label(), self.shift)
    }
}

/// Pointwise product `A(s, t) B(s, t)`.
#[derive(Clone, Debug)]
pub struct Product {
    pub left: SharedUnitary,
    pub right: SharedUnitary,
}

impl Product {
    pub fn new(left: SharedUnitary, right: SharedUnitary) -> Result<Self> {
        if left.n() != right.n() {
            return Err(Error::DimensionMismatch(format!(
                "product of U({}) and U({}) fields",
                left.n(),
                right.n()
            )));
        }
        Ok(Self { left, right })
    }
}

impl UnitaryField for Product {
    fn n(&self) -> usize {
        self.left.n()
    }
    fn value(&self, s: f64, t: f64) -> DMatrix<C64> {
        self.left.value(s, t) * self.right.value(s, t)
    }
    fn ds(&self, s: f64, t: f64) -> DMatrix<C64> {
        self.left.ds(s, t) * self.right.value(s, t) + self.left.value(s, t) * self.right.ds(s, t)
    }
    fn dt(&self, s: f64, t: f64) -> DMatrix<C64> {
        self.left.dt(s, t) * self.right.value(s, t) + self.left.value(s, t) * self.right.dt(s, t)
    }
    fn support_end(&self) -> f64 {
        self.left.support_end().max(self.right.support_end())
    }
    fn label(&self) -> String {
        format!("{}*{}", self.left.label(), self.right.label())
    }
}

/// `U (+) I_extra` on `C^n (+) C^extra`.
#[derive(Clone, Debug)]
pub struct PadIdentity {
    pub inner: SharedUnitary,
    pub extra: usize,
}

impl PadIdentity {
    fn pad(&self, m: DMatrix<C64>, one: C64) -> DMatrix<C64> {
        let k = m.nrows();
        let mut out = DMatrix::zeros(k + self.extra, k + self.extra);
        out.view_mut((0, 0), (k, k)).copy_from(&m);
        for i in k..k + self.extra {
            out[(i, i)] = one;
        }
        out
    }
}

impl UnitaryField for PadIdentity {
    fn n(&self) -> usize {
        self.inner.n() + self.extra
    }
    fn value(&self, s: f64, t: f64) -> DMatrix<C64> {
        self.pad(self.inner.value(s, t), C64::new(1.0, 0.0))
    }
    fn ds(&self, s: f64, t: f64) -> DMatrix<C64> {
        self.pad(self.inner.ds(s, t), C64::new(0.0, 0.0))
    }
    fn dt(&self, s: f64, t: f64) -> DMatrix<C64> {
        self.pad(self.inner.dt(s, t), C64::new(0.0, 0.0))
    }
    fn support_end(&self) -> f64 {
        self.inner.support_end()
    }
    fn label(&self) -> String {
        format!("{}+I{}", self.inner.label(), self.extra)
    }
}

/// Real rotation `R(a (1 - phi(s)) sin 2 pi t)` in `U(2)`; its boundary loop
/// oscillates without winding, so it is contractible in `SO(2)`.
#[derive(Clone, Debug)]
pub struct RotationBump {
    pub amplitude: f64,
}

fn rot(theta: f64) -> DMatrix<C64> {
    let (sn, c) = theta.sin_cos();
    DMatrix::from_row_slice(
        2,
        2,
        &[c, -sn, sn, c].map(|x| C64::new(x, 0.0)),
    )
}

fn rot_derivative(theta: f64) -> DMatrix<C64> {
    let (sn, c) = theta.sin_cos();
    DMatrix::from_row_slice(
        2,
        2,
        &[-sn, -c, c, -sn].map(|x| C64::new(x, 0.0)),
    )
}

impl RotationBump {
    fn angle(&self, s: f64, t: f64) -> f64 {
        self.amplitude * (1.0 - cutoff(s)) * (2.0 * PI * t).sin()
    }
}

impl UnitaryField for RotationBump {
    fn n(&self) -> usize {
        2
    }
    fn value(&self, s: f64, t: f64) -> DMatrix<C64> {
        rot(self.angle(s, t))
    }
    fn ds(&self, s: f64, t: f64) -> DMatrix<C64> {
        let d = -self.amplitude * cutoff_derivative(s) * (2.0 * PI * t).sin();
        rot_derivative(self.angle(s, t)) * C64::new(d, 0.0)
    }
    fn dt(&self, s: f64, t: f64) -> DMatrix<C64> {
        let d = self.amplitude * (1.0 - cutoff(s)) * 2.0 * PI * (2.0 * PI * t).cos();
        rot_derivative(self.angle(s, t)) * C64::new(d, 0.0)
    }
    fn support_end(&self) -> f64 {
        0.5
    }
    fn label(&self) -> String {
        format!("V({})", self.amplitude)
    }
}

/// Scalar phase `exp(2 pi i w (1 - phi(s)))` in `U(1)`; equals 1 at `s = 0`
/// for integer `w`.
#[derive(Clone, Debug)]
pub struct PhaseRamp {
    pub turns: i32,
}

impl PhaseRamp {
    fn phase(&self, s: f64) -> C64 {
        C64::from_polar(1.0, 2.0 * PI * self.turns as f64 * (1.0 - cutoff(s)))
    }
}

impl UnitaryField for PhaseRamp {
    fn n(&self) -> usize {
        1
    }
    fn value(&self, s: f64, _: f64) -> DMatrix<C64> {
        DMatrix::from_element(1, 1, self.phase(s))
    }
    fn ds(&self, s: f64, _: f64) -> DMatrix<C64> {
        let d = C64::new(0.0, -2.0 * PI * self.turns as f64 * cutoff_derivative(s));
        DMatrix::from_element(1, 1, d * self.phase(s))
    }
    fn dt(&self, _: f64, _: f64) -> DMatrix<C64> {
        czero(1)
    }
    fn support_end(&self) -> f64 {
        0.5
    }
    fn label(&self) -> String {
        format!("phase({})", self.turns)
    }
}

/// `||U* U - I||_max` over the sample grid.
pub fn unitarity_defect(u: &dyn UnitaryField, s_samples: &[f64], t_samples: usize) -> f64 {
    let n = u.n();
    let mut worst = 0.0_f64;
    for &s in s_samples {
        for j in 0..t_samples {
            let m = u.value(s, j as f64 / t_samples as f64);
            let d = m.adjoint() * &m - cid(n);
            worst = d.iter().fold(worst, |a, z| a.max(z.norm()));
        }
    }
    worst
}

/// Checks unitarity, `U = I` past the support, and that `U(0, .)` lies in `SO(n)`.
pub fn check_boundary_constraints(u: &dyn UnitaryField) -> Result<()> {
    const TOL: f64 = 1e-12;
    let n = u.n();
    let end = u.support_end();
    let s_samples: Vec<f64> = (0..=32).map(|i| end * i as f64 / 32.0).collect();
    let defect = unitarity_defect(u, &s_samples, 64);
    if defect > TOL {
        return Err(Error::BoundaryConstraint(format!(
            "unitarity defect {defect:.3e}"
        )));
    }
    for j in 0..64 {
        let t = j as f64 / 64.0;
        let far = u.value(end, t) - cid(n);
        if far.iter().any(|z| z.norm() > TOL) {
            return Err(Error::BoundaryConstraint(format!(
                "U({end}, {t}) is not the identity"
            )));
        }
        let start = u.value(0.0, t);
        if start.iter().any(|z| z.im.abs() > TOL) {
            return Err(Error::BoundaryConstraint(format!(
                "U(0, {t}) is not real"
            )));
        }
        let det = start.map(|z| z.re).determinant();
        if (det - 1.0).abs() > 1e-10 {
            return Err(Error::BoundaryConstraint(format!(
                "det U(0, {t}) = {det}, expected 1"
            )));
        }
    }
    Ok(())
}

/// The boundary loop `t -> U(0, t)` as real `n x n` samples.
pub fn boundary_loop(u: &dyn UnitaryField, samples: usize) -> Vec<DMatrix<f64>> {
    (0..samples)
        .map(|j| u.value(0.0, j as f64 / samples as f64).map(|z| z.re))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(u: &dyn UnitaryField, s: f64, t: f64) -> (f64, f64) {
        let h = 1e-6;
        let ds = (u.value(s + h, t) - u.value(s - h, t)) / C64::new(2.0 * h, 0.0);
        let dt = (u.value(s, t + h) - u.value(s, t - h)) / C64::new(2.0 * h, 0.0);
        let es = (ds - u.ds(s, t)).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        let et = (dt - u.dt(s, t)).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        (es, et)
    }

    #[test]
    fn closed_form_derivatives_match_differences() {
        let v: SharedUnitary = Arc::new(RotationBump { amplitude: 0.8 });
        let p: SharedUnitary = Arc::new(PhaseRamp { turns: 2 });
        let prod = Product::new(v.clone(), v.clone()).unwrap();
        let pad = PadIdentity { inner: v.clone(), extra: 1 };
        for &(s, t) in &[(0.1, 0.2), (0.3, 0.77), (0.45, 0.5)] {
            for f in [&*v, &*p, &prod as &dyn UnitaryField, &pad] {
                let (es, et) = fd_check(f, s, t);
                assert!(es < 1e-6 && et < 1e-6, "{} at ({s},{t}): {es} {et}", f.label());
            }
        }
    }

    #[test]
    fn combinators_satisfy_constraints() {
        let v: SharedUnitary = Arc::new(RotationBump { amplitude: 1.3 });
        check_boundary_constraints(&*v).unwrap();
        check_boundary_constraints(&PhaseRamp { turns: -1 }).unwrap();
        check_boundary_constraints(&IdentityField { n: 3 }).unwrap();
        check_boundary_constraints(&Shifted { inner: v, shift: 0.2 }).unwrap();
        let phase: SharedUnitary = Arc::new(PhaseRamp { turns: 1 });
        assert!(check_boundary_constraints(&Shifted { inner: phase, shift: 0.2 }).is_err());
    }
}
