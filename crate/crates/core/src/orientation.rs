//! Orientations of kernels along paths of surjective operators, and the sign
//! of the map induced by conjugation with a unitary gauge.
//!
//! For surjective operators the determinant line is the top exterior power
//! of the kernel, so an orientation is an ordered kernel frame up to
//! positive change of basis. Frames are carried along a path by projecting
//! the previous frame onto the next kernel and taking the orthogonal factor.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::cr_operator::{numerical_kernel, Discretization, DiscretizedOperator, KernelFrame, TolPolicy};
use crate::error::{Error, Result};
use crate::field::{ConjugatedField, Domain, SharedField};
use crate::linalg::{max_principal_angle, realify};
use crate::spin_lift::{delta_sign, SoLoop};
use crate::unitary::{boundary_loop, check_boundary_constraints, SharedUnitary, Shifted};

/// Smallest admissible `|det|` of a per-step alignment matrix.
pub const ALIGNMENT_THRESHOLD: f64 = 0.5;
/// Largest admissible principal angle between consecutive kernels.
pub const MAX_STEP_ANGLE: f64 = std::f64::consts::FRAC_PI_4;
/// Parameter steps used when no grid is given; coarser grids fail alignment
/// for the doubly winding gauge.
pub const DEFAULT_TRANSPORT_STEPS: usize = 64;

/// A sampled path of half-cylinder fields sharing one asymptotic loop.
#[derive(Clone, Debug)]
pub struct OperatorPath {
    params: Vec<f64>,
    fields: Vec<SharedField>,
    disc: Discretization,
}

impl OperatorPath {
    pub fn new(params: Vec<f64>, fields: Vec<SharedField>, disc: Discretization) -> Result<Self> {
        if params.len() != fields.len() || params.is_empty() {
            return Err(Error::InvalidInput("need one field per parameter value".into()));
        }
        let increasing = params.windows(2).all(|w| w[1] > w[0]);
        let decreasing = params.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidInput("parameter grid must be strictly monotone".into()));
        }
        let n = fields[0].n();
        let plus = fields[0].plus_loop();
        for (p, f) in params.iter().zip(&fields) {
            if f.n() != n || f.domain() != Domain::Half {
                return Err(Error::InvalidInput(format!(
                    "field at parameter {p} is not a half-cylinder field on C^{n}"
                )));
            }
            let other = f.plus_loop();
            for j in 0..16 {
                let t = j as f64 / 16.0;
                if (other.eval(t) - plus.eval(t)).amax() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "field at parameter {p} has a different asymptotic loop"
                    )));
                }
            }
        }
        Ok(Self {
            params,
            fields,
            disc,
        })
    }

    /// Samples `family` on `steps + 1` equispaced points from `from` to `to`.
    pub fn from_family(
        from: f64,
        to: f64,
        steps: usize,
        disc: Discretization,
        family: impl Fn(f64) -> Result<SharedField>,
    ) -> Result<Self> {
        let steps = steps.max(1);
        let params: Vec<f64> = (0..=steps)
            .map(|i| from + (to - from) * i as f64 / steps as f64)
            .collect();
        let fields = params.iter().map(|&p| family(p)).collect::<Result<Vec<_>>>()?;
        Self::new(params, fields, disc)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn reversed(&self) -> Self {
        let mut params = self.params.clone();
        let mut fields = self.fields.clone();
        params.reverse();
        fields.reverse();
        Self {
            params,
            fields,
            disc: self.disc,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrientationSign {
    pub value: i8,
    /// `det(K_i^T F_{i-1})` for each step.
    pub step_determinants: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Transport {
    /// Canonical kernel frames at each grid point.
    pub kernels: Vec<KernelFrame>,
    /// Transported frame at each grid point.
    pub frames: Vec<DMatrix<f64>>,
    /// Orientation of the final transported frame relative to the final
    /// canonical frame (and the start frame relative to the initial one).
    pub sign: OrientationSign,
}

impl Transport {
    pub fn final_frame(&self) -> &DMatrix<f64> {
        self.frames.last().unwrap()
    }
}

fn orthogonal_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

fn sign_of(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

/// Kernel frame of a surjective operator; fails unless `dim ker` equals the
/// structural index.
fn surjective_kernel(
    field: &SharedField,
    disc: &Discretization,
    policy: &TolPolicy,
    param: f64,
) -> Result<(KernelFrame, usize)> {
    let op = DiscretizedOperator::half_cylinder(&**field, disc)?;
    let k = numerical_kernel(&op, policy)?;
    let expected = op.structural_index().max(0) as usize;
    if k.dim() != expected {
        return Err(Error::LeavesSurjectiveStratum {
            parameter: param,
            expected,
            found: k.dim(),
        });
    }
    Ok((k, op.cols()))
}

/// Carries an orientation along `path`.
///
/// Starts from `initial` (any frame of the first kernel, projected onto it)
/// or from the canonical frame of the first kernel.
pub fn transport_orientation(
    path: &OperatorPath,
    policy: &TolPolicy,
    initial: Option<&DMatrix<f64>>,
) -> Result<Transport> {
    let results: Vec<Result<(KernelFrame, usize)>> = path
        .params
        .par_iter()
        .zip(path.fields.par_iter())
        .map(|(&p, f)| surjective_kernel(f, &path.disc, policy, p))
        .collect();
    let kernels: Vec<KernelFrame> = results
        .into_iter()
        .map(|r| r.map(|(k, _)| k))
        .collect::<Result<_>>()?;
    let d = kernels[0].dim();
    for (k, &p) in kernels.iter().zip(&path.params) {
        if k.dim() != d {
            return Err(Error::LeavesSurjectiveStratum {
                parameter: p,
                expected: d,
                found: k.dim(),
            });
        }
    }

    let mut value: i8 = 1;
    let mut step_determinants = Vec::with_capacity(kernels.len());
    let k0 = &kernels[0].vectors;
    let mut frame = match initial {
        Some(f0) => {
            if f0.nrows() != k0.nrows() || f0.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "initial frame is {}x{}, kernel is {}x{d}",
                    f0.nrows(),
                    f0.ncols(),
                    k0.nrows()
                )));
            }
            let m = k0.transpose() * f0;
            let det = m.determinant();
            if det.abs() < ALIGNMENT_THRESHOLD * column_scale(f0) {
                return Err(Error::RefineParameterGrid { step: 0, det });
            }
            value *= sign_of(det);
            k0 * orthogonal_factor(&m)
        }
        None => k0.clone(),
    };
    let mut frames = vec![frame.clone()];
    for i in 1..kernels.len() {
        let k = &kernels[i].vectors;
        let angle = max_principal_angle(k, &kernels[i - 1].vectors);
        let m = k.transpose() * &frame;
        let det = m.determinant();
        step_determinants.push(det);
        if det.abs() < ALIGNMENT_THRESHOLD || angle >= MAX_STEP_ANGLE {
            return Err(Error::RefineParameterGrid { step: i, det });
        }
        value *= sign_of(det);
        frame = k * orthogonal_factor(&m);
        frames.push(frame.clone());
    }
    Ok(Transport {
        kernels,
        frames,
        sign: OrientationSign {
            value,
            step_determinants,
        },
    })
}

fn column_scale(f: &DMatrix<f64>) -> f64 {
    f.column_iter().map(|c| c.norm()).product()
}

/// Applies `u -> U u` pointwise to the columns of `frame` (coefficients of
/// `from`) and returns coefficients for `to`, which must share the grid.
pub fn push_forward(
    gauge: &dyn crate::unitary::UnitaryField,
    from: &DiscretizedOperator,
    to: &DiscretizedOperator,
    frame: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = from.n();
    let nt = from.discretization().t_points();
    let gauges: Vec<Vec<DMatrix<f64>>> = from
        .s_nodes()
        .iter()
        .map(|&s| {
            (0..nt)
                .map(|j| realify(&gauge.value(s, j as f64 / nt as f64)))
                .collect()
        })
        .collect();
    let mut out = DMatrix::zeros(to.cols(), frame.ncols());
    for c in 0..frame.ncols() {
        let x = frame.column(c).clone_owned();
        let nodal: Vec<_> = from
            .nodal_values(&x)
            .into_iter()
            .zip(&gauges)
            .map(|(mut v, g)| {
                for (j, gj) in g.iter().enumerate() {
                    let blk = v.rows(j * 2 * n, 2 * n).clone_owned();
                    v.rows_mut(j * 2 * n, 2 * n).copy_from(&(gj * blk));
                }
                v
            })
            .collect();
        out.set_column(c, &to.coefficients(&nodal));
    }
    out
}

/// Result of comparing conjugation with transport.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugationReport {
    pub sign: i8,
    /// `det(F^T U K)`: transported frame against the pushed-forward frame.
    pub alignment: f64,
    pub transport: OrientationSign,
    pub kernel_dim: usize,
}

/// The sign of the canonical map `det(D) -> det(U D U^{-1})`.
///
/// A canonical kernel frame `K` of `D` is pushed forward by multiplication
/// with `U` and compared with `K` transported along
/// `rho -> U_rho D U_rho^{-1}`, `U_rho(s, t) = U(s + rho * s_U, t)` from
/// `rho = 1` (where `U_rho = I`) to `rho = 0`. For `U = W` this is the family
/// `T_r`. Fails if the path leaves the surjective operators.
pub fn conjugation_sign(
    gauge: &SharedUnitary,
    base: &SharedField,
    disc: &Discretization,
    steps: usize,
    policy: &TolPolicy,
) -> Result<ConjugationReport> {
    check_boundary_constraints(&**gauge)?;
    if base.domain() != Domain::Half || base.n() != gauge.n() {
        return Err(Error::InvalidInput(
            "base must be a half-cylinder field of the gauge's dimension".into(),
        ));
    }
    let reach = gauge.support_end();
    let family = |rho: f64| -> Result<SharedField> {
        let shifted: SharedUnitary = Arc::new(Shifted {
            inner: gauge.clone(),
            shift: rho * reach,
        });
        Ok(Arc::new(ConjugatedField::new(shifted, base.clone())?))
    };
    let path = OperatorPath::from_family(1.0, 0.0, steps, *disc, family)?;
    let transport = transport_orientation(&path, policy, None)?;
    let start = DiscretizedOperator::half_cylinder(&*path.fields[0], disc)?;
    let end = DiscretizedOperator::half_cylinder(&*path.fields[path.fields.len() - 1], disc)?;
    let pushed = push_forward(&**gauge, &start, &end, &transport.kernels[0].vectors);
    let alignment = (transport.final_frame().transpose() * pushed).determinant();
    if alignment.abs() < ALIGNMENT_THRESHOLD {
        return Err(Error::RefineParameterGrid {
            step: steps,
            det: alignment,
        });
    }
    Ok(ConjugationReport {
        sign: sign_of(alignment),
        alignment,
        kernel_dim: transport.kernels[0].dim(),
        transport: transport.sign,
    })
}

/// Sign predicted from the boundary loop `U(0, .)`: `+1` iff it lifts to
/// `Spin(n)` (always for `n = 1`).
pub fn predict_sign(gauge: &dyn crate::unitary::UnitaryField) -> Result<i8> {
    check_boundary_constraints(gauge)?;
    if gauge.n() == 1 {
        return Ok(1);
    }
    let lp = SoLoop::new(boundary_loop(gauge, 256))?;
    delta_sign(&lp)
}
