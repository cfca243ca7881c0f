//! Coefficient fields `S(s, t)` of operators `u -> d_s u - J0 d_t u - S u`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analytic_oracles::{cutoff, cutoff_derivative};
use crate::error::{Error, Result};
use crate::linalg::{j0, max_abs, realify};
use crate::symplectic_path::SymmetricLoop;
use crate::unitary::SharedUnitary;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// `[0, +inf) x T` with `u(0, t)` in `i R^n`.
    Half,
    /// `R x T`.
    Full,
}

pub trait OperatorField: Send + Sync + std::fmt::Debug {
    fn n(&self) -> usize;
    fn domain(&self) -> Domain;
    /// Real `2n x 2n` coefficient matrix.
    fn matrix(&self, s: f64, t: f64) -> DMatrix<f64>;
    /// `d/ds S(s, t)`. Only enters the high-order correction of the `s`
    /// discretization, so a central difference is accurate enough by default.
    fn matrix_ds(&self, s: f64, t: f64) -> DMatrix<f64> {
        let h = 1e-5;
        (self.matrix(s + h, t) - self.matrix(s - h, t)) / (2.0 * h)
    }
    fn plus_loop(&self) -> SymmetricLoop;
    fn minus_loop(&self) -> Option<SymmetricLoop> {
        None
    }
    /// `S(s, .)` equals the asymptotic loop for `|s| >= transition_end`.
    fn transition_end(&self) -> f64;
}

pub type SharedField = Arc<dyn OperatorField>;

/// `S(s, t) = S0` for all `(s, t)`.
#[derive(Clone, Debug)]
pub struct ConstantField {
    lp: SymmetricLoop,
    matrix: DMatrix<f64>,
    domain: Domain,
}

impl ConstantField {
    pub fn new(matrix: DMatrix<f64>, domain: Domain) -> Result<Self> {
        let lp = SymmetricLoop::constant(matrix.clone())?;
        Ok(Self { lp, matrix, domain })
    }

    /// `S = c I` in complex dimension `n`.
    pub fn scalar(n: usize, c: f64, domain: Domain) -> Self {
        Self {
            lp: SymmetricLoop::scalar(n, c),
            matrix: DMatrix::from_diagonal_element(2 * n, 2 * n, c),
            domain,
        }
    }
}

impl OperatorField for ConstantField {
    fn n(&self) -> usize {
        self.lp.n()
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn matrix(&self, _: f64, _: f64) -> DMatrix<f64> {
        self.matrix.clone()
    }
    fn matrix_ds(&self, _: f64, _: f64) -> DMatrix<f64> {
        DMatrix::zeros(self.matrix.nrows(), self.matrix.ncols())
    }
    fn plus_loop(&self) -> SymmetricLoop {
        self.lp.clone()
    }
    fn minus_loop(&self) -> Option<SymmetricLoop> {
        (self.domain == Domain::Full).then(|| self.lp.clone())
    }
    fn transition_end(&self) -> f64 {
        0.0
    }
}

/// The field of `U D_S U^{-1}` for a half-cylinder field `S`:
/// `(d_s U) U^{-1} - J0 (d_t U) U^{-1} + U S U^{-1}`.
#[derive(Clone, Debug)]
pub struct ConjugatedField {
    pub gauge: SharedUnitary,
    pub base: SharedField,
}

impl ConjugatedField {
    pub fn new(gauge: SharedUnitary, base: SharedField) -> Result<Self> {
        if gauge.n() != base.n() {
            return Err(Error::DimensionMismatch(format!(
                "gauge acts on C^{}, field on C^{}",
                gauge.n(),
                base.n()
            )));
        }
        if base.domain() != Domain::Half {
            return Err(Error::InvalidInput(
                "conjugation is only defined for half-cylinder fields".into(),
            ));
        }
        Ok(Self { gauge, base })
    }
}

impl OperatorField for ConjugatedField {
    fn n(&self) -> usize {
        self.base.n()
    }
    fn domain(&self) -> Domain {
        Domain::Half
    }
    fn matrix(&self, s: f64, t: f64) -> DMatrix<f64> {
        let u = realify(&self.gauge.value(s, t));
        let ut = u.transpose();
        let us = realify(&self.gauge.ds(s, t));
        let udt = realify(&self.gauge.dt(s, t));
        let j = j0(self.n());
        &us * &ut - j * udt * &ut + &u * self.base.matrix(s, t) * &ut
    }
    fn plus_loop(&self) -> SymmetricLoop {
        self.base.plus_loop()
    }
    fn transition_end(&self) -> f64 {
        self.gauge.support_end().max(self.base.transition_end())
    }
}

/// Full-cylinder field equal to `S^-` for `s <= -1`, `S^+` for `s >= 1`, and a
/// smooth monotone blend in between.
#[derive(Clone, Debug)]
pub struct InterpolatedField {
    minus: SymmetricLoop,
    plus: SymmetricLoop,
}

impl InterpolatedField {
    pub fn new(minus: SymmetricLoop, plus: SymmetricLoop) -> Result<Self> {
        if minus.n() != plus.n() {
            return Err(Error::DimensionMismatch("asymptotic loops of different size".into()));
        }
        Ok(Self { minus, plus })
    }

    fn weight(s: f64) -> f64 {
        cutoff((s + 1.0) / 4.0)
    }
}

impl OperatorField for InterpolatedField {
    fn n(&self) -> usize {
        self.plus.n()
    }
    fn domain(&self) -> Domain {
        Domain::Full
    }
    fn matrix(&self, s: f64, t: f64) -> DMatrix<f64> {
        let w = Self::weight(s);
        self.minus.eval(t) * (1.0 - w) + self.plus.eval(t) * w
    }
    fn matrix_ds(&self, s: f64, t: f64) -> DMatrix<f64> {
        (self.plus.eval(t) - self.minus.eval(t)) * (cutoff_derivative((s + 1.0) / 4.0) / 4.0)
    }
    fn plus_loop(&self) -> SymmetricLoop {
        self.plus.clone()
    }
    fn minus_loop(&self) -> Option<SymmetricLoop> {
        Some(self.minus.clone())
    }
    fn transition_end(&self) -> f64 {
        1.0
    }
}

/// Field sampled on a uniform `s` grid over `[s_min, s_max]` and a uniform
/// periodic `t` grid; bilinear interpolation inside, constant in `s` outside.
#[derive(Clone, Debug)]
pub struct SampledField {
    n: usize,
    domain: Domain,
    s_min: f64,
    s_max: f64,
    /// `samples[i][j] = S(s_i, t_j)`.
    samples: Vec<Vec<DMatrix<f64>>>,
}

/// Largest allowed asymmetry of the outermost `s` row.
pub const ASYMPTOTIC_SYMMETRY_TOL: f64 = 1e-10;

impl SampledField {
    pub fn new(
        domain: Domain,
        s_min: f64,
        s_max: f64,
        samples: Vec<Vec<DMatrix<f64>>>,
    ) -> Result<Self> {
        let rows = samples.len();
        let nt = samples.first().map_or(0, |r| r.len());
        if rows < 2 || nt == 0 || !(s_max > s_min) {
            return Err(Error::InvalidInput(
                "sampled field needs >= 2 s-rows, >= 1 t-sample and s_max > s_min".into(),
            ));
        }
        let dim = samples[0][0].nrows();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::DimensionMismatch("samples must be 2n x 2n".into()));
        }
        for (i, row) in samples.iter().enumerate() {
            if row.len() != nt {
                return Err(Error::InvalidInput(format!("s-row {i} has {} samples, expected {nt}", row.len())));
            }
            if row.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
                return Err(Error::DimensionMismatch(format!("s-row {i} has a sample of the wrong size")));
            }
        }
        if domain == Domain::Half && s_min != 0.0 {
            return Err(Error::InvalidInput("half-cylinder samples must start at s = 0".into()));
        }
        let field = Self {
            n: dim / 2,
            domain,
            s_min,
            s_max,
            samples,
        };
        let mut ends = vec![rows - 1];
        if domain == Domain::Full {
            ends.push(0);
        }
        for i in ends {
            for (j, m) in field.samples[i].iter().enumerate() {
                let defect = max_abs(&(m - m.transpose()));
                if defect > ASYMPTOTIC_SYMMETRY_TOL {
                    return Err(Error::NonSymmetric {
                        sample: i * nt + j,
                        defect,
                    });
                }
            }
        }
        Ok(field)
    }

    fn row_loop(&self, i: usize) -> SymmetricLoop {
        let sym = self.samples[i]
            .iter()
            .map(|m| (m + m.transpose()) * 0.5)
            .collect();
        SymmetricLoop::sampled(sym).expect("validated on construction")
    }
}

impl OperatorField for SampledField {
    fn n(&self) -> usize {
        self.n
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn matrix(&self, s: f64, t: f64) -> DMatrix<f64> {
        let rows = self.samples.len();
        let nt = self.samples[0].len();
        let x = ((s - self.s_min) / (self.s_max - self.s_min)).clamp(0.0, 1.0) * (rows - 1) as f64;
        let i = (x.floor() as usize).min(rows - 2);
        let ws = x - i as f64;
        let y = t.rem_euclid(1.0) * nt as f64;
        let j = (y.floor() as usize).min(nt - 1);
        let wt = y - j as f64;
        let j1 = (j + 1) % nt;
        let at = |r: usize| &self.samples[r][j] * (1.0 - wt) + &self.samples[r][j1] * wt;
        at(i) * (1.0 - ws) + at(i + 1) * ws
    }
    fn plus_loop(&self) -> SymmetricLoop {
        self.row_loop(self.samples.len() - 1)
    }
    fn minus_loop(&self) -> Option<SymmetricLoop> {
        (self.domain == Domain::Full).then(|| self.row_loop(0))
    }
    fn transition_end(&self) -> f64 {
        self.s_max.abs().max(self.s_min.abs())
    }
}
