//! Closed-form reference objects: the cutoff, the winding gauge `W`, the field
//! family `T_r` joining `W D W^{-1}` to `D` for `D = d_s - i d_t + pi`, explicit
//! kernel bases along that family, and the contraction integral for scalar
//! phase gauges.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, Vector2};

use crate::error::{Error, Result};
use crate::field::{ConjugatedField, ConstantField, Domain, OperatorField, SharedField};
use crate::linalg::{j0, realify_vec, C64};
use crate::unitary::{Product, SharedUnitary, Shifted, UnitaryField};

/// Smoothstep on `[0, 1/2]`: `6x^5 - 15x^4 + 10x^3` with `x = clamp(2s, 0, 1)`.
pub fn cutoff(s: f64) -> f64 {
    let x = (2.0 * s).clamp(0.0, 1.0);
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

pub fn cutoff_derivative(s: f64) -> f64 {
    let x = 2.0 * s;
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    60.0 * x * x * (1.0 - x) * (1.0 - x)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The gauge `W: [0, +inf] x T -> U(2)`: rotation by `2 pi t` at `s = 0`,
/// `diag(-i, i)` at `s = 1/2`, identity for `s >= 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct WindingGauge;

struct Branch {
    value: DMatrix<C64>,
    ds: DMatrix<C64>,
    dt: DMatrix<C64>,
}

impl WindingGauge {
    fn branch(s: f64, t: f64) -> Branch {
        if s.is_infinite() && s > 0.0 {
            return Branch {
                value: DMatrix::identity(2, 2),
                ds: DMatrix::zeros(2, 2),
                dt: DMatrix::zeros(2, 2),
            };
        }
        if s <= 0.5 {
            let f = cutoff(s);
            let df = cutoff_derivative(s);
            let g = 1.0 - f;
            let omega = 1.0 / (f * f + g * g).sqrt();
            let domega = -(2.0 * f - 1.0) * df * omega.powi(3);
            let (sn, cs) = (2.0 * PI * t).sin_cos();
            let m = DMatrix::from_row_slice(
                2,
                2,
                &[c(g * cs, -f), c(-g * sn, 0.0), c(g * sn, 0.0), c(g * cs, f)],
            );
            let dm = DMatrix::from_row_slice(
                2,
                2,
                &[c(-cs * df, -df), c(sn * df, 0.0), c(-sn * df, 0.0), c(-cs * df, df)],
            );
            let dtm = DMatrix::from_row_slice(
                2,
                2,
                &[c(-sn, 0.0), c(-cs, 0.0), c(cs, 0.0), c(-sn, 0.0)],
            ) * c(omega * g * 2.0 * PI, 0.0);
            Branch {
                ds: &m * c(domega, 0.0) + dm * c(omega, 0.0),
                value: m * c(omega, 0.0),
                dt: dtm,
            }
        } else {
            let a = FRAC_PI_2 * cutoff(s - 0.5);
            let da = FRAC_PI_2 * cutoff_derivative(s - 0.5);
            let e = C64::from_polar(1.0, a);
            let z = c(0.0, 0.0);
            Branch {
                value: DMatrix::from_row_slice(2, 2, &[c(0.0, -1.0) * e, z, z, c(0.0, 1.0) * e.conj()]),
                ds: DMatrix::from_row_slice(2, 2, &[e * da, z, z, e.conj() * da]),
                dt: DMatrix::zeros(2, 2),
            }
        }
    }
}

impl UnitaryField for WindingGauge {
    fn n(&self) -> usize {
        2
    }
    fn value(&self, s: f64, t: f64) -> DMatrix<C64> {
        Self::branch(s, t).value
    }
    fn ds(&self, s: f64, t: f64) -> DMatrix<C64> {
        Self::branch(s, t).ds
    }
    fn dt(&self, s: f64, t: f64) -> DMatrix<C64> {
        Self::branch(s, t).dt
    }
    fn support_end(&self) -> f64 {
        1.0
    }
    fn label(&self) -> String {
        "W".into()
    }
}

/// `W(s, t)`; accepts `s = +inf`.
pub fn winding_gauge(s: f64, t: f64) -> DMatrix<C64> {
    WindingGauge.value(s, t)
}

pub fn winding_gauge_field() -> SharedUnitary {
    Arc::new(WindingGauge)
}

/// Pointwise square `W^2`; its boundary loop winds twice.
pub fn winding_gauge_squared() -> SharedUnitary {
    Arc::new(Product::new(winding_gauge_field(), winding_gauge_field()).expect("same size"))
}

/// `S = -pi I` on the half-cylinder.
pub fn minus_pi_field(n: usize) -> SharedField {
    Arc::new(ConstantField::scalar(n, -PI, Domain::Half))
}

fn check_unit(name: &'static str, r: f64, min: f64, max: f64) -> Result<()> {
    if !(min..=max).contains(&r) {
        return Err(Error::OutOfRange {
            name,
            value: r,
            min,
            max,
        });
    }
    Ok(())
}

/// `T_r`: the field of `W_r D W_r^{-1}` with `W_r(s, t) = W(r + s, t)` and
/// `S = -pi I`. Equals `-pi I` wherever `r + s >= 1`.
pub fn winding_family_field(r: f64) -> Result<ConjugatedField> {
    check_unit("r", r, 0.0, 1.0)?;
    let gauge: SharedUnitary = Arc::new(Shifted {
        inner: winding_gauge_field(),
        shift: r,
    });
    ConjugatedField::new(gauge, minus_pi_field(2))
}

/// A basis `(u_r, v_r)` of `ker D_{T_r}`, each of the form
/// `W_r(s, t) (a0 e^{-pi s} + a1 e^{2 pi i t} e^{-3 pi s})`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelPair {
    pub r: f64,
    pub u0: Vector2<C64>,
    pub u1: Vector2<C64>,
    pub v0: Vector2<C64>,
    pub v1: Vector2<C64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Member {
    U,
    V,
}

/// Value and first partials of a `C^n`-valued function at a point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: Vec<C64>,
    pub ds: Vec<C64>,
    pub dt: Vec<C64>,
}

/// Kernel basis for `0 <= r <= 1/2`, where the boundary gauge still mixes modes.
pub fn kernel_pair_mixed(r: f64) -> Result<KernelPair> {
    check_unit("r", r, 0.0, 0.5)?;
    let f = cutoff(r);
    let (a, b, ab) = (f * f, (1.0 - f) * (1.0 - f), f * (1.0 - f));
    Ok(KernelPair {
        r,
        u0: Vector2::new(c(a, b), c(-a, b)),
        v0: Vector2::new(c(a, -b), c(a, b)),
        u1: Vector2::new(c(-1.0, -1.0), c(1.0, -1.0)) * c(ab, 0.0),
        v1: Vector2::new(c(1.0, -1.0), c(1.0, 1.0)) * c(ab, 0.0),
    })
}

/// Kernel basis for `1/2 <= r <= 1`, where the boundary gauge is diagonal.
pub fn kernel_pair_diagonal(r: f64) -> Result<KernelPair> {
    check_unit("r", r, 0.5, 1.0)?;
    let e = C64::from_polar(1.0, FRAC_PI_2 * cutoff(r - 0.5));
    let zero = Vector2::zeros();
    Ok(KernelPair {
        r,
        u0: Vector2::new(e.conj(), -e),
        v0: Vector2::new(e.conj(), e),
        u1: zero,
        v1: zero,
    })
}

/// Continuous kernel basis over `r in [0, 1]`.
pub fn kernel_pair(r: f64) -> Result<KernelPair> {
    if r <= 0.5 {
        kernel_pair_mixed(r)
    } else {
        kernel_pair_diagonal(r)
    }
}

impl KernelPair {
    fn coefficients(&self, member: Member) -> (Vector2<C64>, Vector2<C64>) {
        match member {
            Member::U => (self.u0, self.u1),
            Member::V => (self.v0, self.v1),
        }
    }

    pub fn jet(&self, member: Member, s: f64, t: f64) -> Jet {
        let (a0, a1) = self.coefficients(member);
        let e0 = (-PI * s).exp();
        let e1 = C64::from_polar((-3.0 * PI * s).exp(), 2.0 * PI * t);
        let g = a0 * c(e0, 0.0) + a1 * e1;
        let gs = a0 * c(-PI * e0, 0.0) + a1 * (e1 * -3.0 * PI);
        let gt = a1 * (e1 * c(0.0, 2.0 * PI));
        let sr = s + self.r;
        let br = WindingGauge::branch(sr, t);
        let w = DMatrix::from_iterator(2, 2, br.value.iter().copied());
        let to_vec = |m: DMatrix<C64>| m.iter().copied().collect::<Vec<_>>();
        let gm = DMatrix::from_column_slice(2, 1, g.as_slice());
        let gsm = DMatrix::from_column_slice(2, 1, gs.as_slice());
        let gtm = DMatrix::from_column_slice(2, 1, gt.as_slice());
        Jet {
            value: to_vec(&w * &gm),
            ds: to_vec(&br.ds * &gm + &w * gsm),
            dt: to_vec(&br.dt * &gm + &w * gtm),
        }
    }

    pub fn eval(&self, member: Member, s: f64, t: f64) -> Vec<C64> {
        self.jet(member, s, t).value
    }
}

/// `|d_s f - J0 d_t f - S f|_inf` at one point, in real coordinates.
pub fn pointwise_residual(field: &dyn OperatorField, jet: &Jet, s: f64, t: f64) -> f64 {
    let n = field.n();
    let v = nalgebra::DVector::from_vec(realify_vec(&jet.value));
    let vs = nalgebra::DVector::from_vec(realify_vec(&jet.ds));
    let vt = nalgebra::DVector::from_vec(realify_vec(&jet.dt));
    let res = vs - j0(n) * vt - field.matrix(s, t) * v;
    res.amax()
}

/// Absolute accuracy requested from the quadrature.
pub const INTEGRAL_TOL: f64 = 1e-10;

/// `2 pi int_0^inf e^{-2 pi x} (cos 2 pi theta(x / r) - sin 2 pi theta(x / r)) dx`.
///
/// This is the coefficient of `i e^{-pi s}` after conjugating the kernel of
/// `d_s - i d_t + pi` by the phase gauge `exp(2 pi i theta(s / r))`; it is 1
/// for constant integer `theta` and tends to 1 as `r -> inf`.
pub fn contraction_integral(theta: &dyn Fn(f64) -> f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidInput(format!("scale r = {r} must be positive and finite")));
    }
    for (label, x) in [("theta(0)", theta(0.0)), ("theta(+inf)", theta(1e12))] {
        if (x - x.round()).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("{label} = {x} is not an integer")));
        }
    }
    // e^{-2 pi x} < 1e-16 beyond x = 6
    let integrand = |x: f64| {
        let a = 2.0 * PI * theta(x / r);
        2.0 * PI * (-2.0 * PI * x).exp() * (a.cos() - a.sin())
    };
    let mut total = 0.0;
    // split at the end of the transition so the quadrature sees smooth pieces
    let knee = (0.5 * r).min(6.0);
    for (a, b) in [(0.0, knee), (knee, 6.0)] {
        if b > a {
            let out = quadrature::double_exponential::integrate(integrand, a, b, INTEGRAL_TOL);
            if !(out.error_estimate <= 1e-8) {
                return Err(Error::Numerical(format!(
                    "quadrature error estimate {:.3e}",
                    out.error_estimate
                )));
            }
            total += out.integral;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn cnorm(m: &DMatrix<C64>) -> f64 {
        m.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(-1.0), 0.0);
        assert_eq!(cutoff(0.0), 0.0);
        assert_eq!(cutoff(0.5), 1.0);
        assert_eq!(cutoff(3.0), 1.0);
        assert!((cutoff(0.25) - 0.5).abs() < 1e-15);
        let h = 1e-6;
        for i in 1..50 {
            let s = i as f64 / 100.0;
            let fd = (cutoff(s + h) - cutoff(s - h)) / (2.0 * h);
            assert!((fd - cutoff_derivative(s)).abs() < 1e-6);
            assert!(cutoff_derivative(s) >= 0.0);
        }
    }

    #[test]
    fn gauge_reference_values() {
        for j in 0..16 {
            let t = j as f64 / 16.0;
            let (sn, cs) = (2.0 * PI * t).sin_cos();
            let rotation = DMatrix::from_row_slice(2, 2, &[c(cs, 0.0), c(-sn, 0.0), c(sn, 0.0), c(cs, 0.0)]);
            assert!(cnorm(&(winding_gauge(0.0, t) - rotation)) < 1e-15);
            let half = DMatrix::from_row_slice(2, 2, &[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);
            assert!(cnorm(&(winding_gauge(0.5, t) - &half)) < 1e-12);
            // continuity across the branch point
            assert!(cnorm(&(winding_gauge(0.5 - 1e-9, t) - &half)) < 1e-8);
            for s in [1.0, 1.5, 40.0, f64::INFINITY] {
                assert!(cnorm(&(winding_gauge(s, t) - DMatrix::identity(2, 2))) < 1e-15);
            }
        }
    }

    #[test]
    fn gauge_is_unitary_with_exact_derivatives() {
        let h = 1e-6;
        for i in 0..=24 {
            let s = i as f64 / 20.0 + 0.013;
            for j in 0..8 {
                let t = j as f64 / 8.0 + 0.01;
                let w = winding_gauge(s, t);
                assert!(cnorm(&(w.adjoint() * &w - DMatrix::identity(2, 2))) < 1e-12);
                let fds = (winding_gauge(s + h, t) - winding_gauge(s - h, t)) / c(2.0 * h, 0.0);
                let fdt = (winding_gauge(s, t + h) - winding_gauge(s, t - h)) / c(2.0 * h, 0.0);
                assert!(cnorm(&(fds - WindingGauge.ds(s, t))) < 1e-6, "ds at {s},{t}");
                assert!(cnorm(&(fdt - WindingGauge.dt(s, t))) < 1e-6, "dt at {s},{t}");
            }
        }
    }

    #[test]
    fn family_endpoints() {
        let t1 = winding_family_field(1.0).unwrap();
        let minus = DMatrix::from_diagonal_element(4, 4, -PI);
        for &(s, t) in &[(0.0, 0.1), (0.7, 0.4), (3.0, 0.9)] {
            assert!(max_abs(&(t1.matrix(s, t) - &minus)) < 1e-14);
        }
        for r in [0.0, 0.3, 0.8] {
            let f = winding_family_field(r).unwrap();
            assert!(max_abs(&(f.matrix(1.0 - r + 0.01, 0.37) - &minus)) < 1e-14);
            assert!(max_abs(&(f.matrix(1.0 - r, 0.37) - &minus)) < 1e-14);
        }
        assert!(winding_family_field(1.5).is_err());
    }

    #[test]
    fn kernel_pairs_solve_the_equation_with_boundary_condition() {
        for i in 0..=20 {
            let r = i as f64 / 20.0;
            let field = winding_family_field(r).unwrap();
            let pair = kernel_pair(r).unwrap();
            for member in [Member::U, Member::V] {
                for a in 0..50 {
                    let s = a as f64 * 0.041;
                    for b in 0..20 {
                        let t = b as f64 / 20.0 + 0.003;
                        let jet = pair.jet(member, s, t);
                        let res = pointwise_residual(&field, &jet, s, t);
                        assert!(res < 1e-10, "r={r} s={s} t={t} residual {res}");
                    }
                }
                for b in 0..64 {
                    let v = pair.eval(member, 0.0, b as f64 / 64.0);
                    assert!(v.iter().all(|z| z.re.abs() < 1e-10), "boundary at r={r}");
                }
            }
        }
    }

    #[test]
    fn coefficients_at_reference_parameters() {
        let z = Vector2::zeros();
        let p0 = kernel_pair_mixed(0.0).unwrap();
        assert_eq!(p0.u0, Vector2::new(c(0.0, 1.0), c(0.0, 1.0)));
        assert_eq!(p0.v0, Vector2::new(c(0.0, -1.0), c(0.0, 1.0)));
        assert_eq!((p0.u1, p0.v1), (z, z));
        let ph = kernel_pair_mixed(0.5).unwrap();
        let dh = kernel_pair_diagonal(0.5).unwrap();
        assert_eq!(ph.u0, Vector2::new(c(1.0, 0.0), c(-1.0, 0.0)));
        assert_eq!(ph.v0, Vector2::new(c(1.0, 0.0), c(1.0, 0.0)));
        assert_eq!(ph, dh);
        let p1 = kernel_pair_diagonal(1.0).unwrap();
        let close = |a: Vector2<C64>, b: Vector2<C64>| (a - b).norm() < 1e-15;
        assert!(close(p1.u0, Vector2::new(c(0.0, -1.0), c(0.0, -1.0))));
        assert!(close(p1.v0, Vector2::new(c(0.0, -1.0), c(0.0, 1.0))));
        assert!(kernel_pair_mixed(0.6).is_err());
        assert!(kernel_pair_diagonal(0.4).is_err());
    }

    #[test]
    fn endpoint_relation_under_the_gauge() {
        let p0 = kernel_pair(0.0).unwrap();
        let p1 = kernel_pair(1.0).unwrap();
        for a in 0..40 {
            let s = a as f64 * 0.05;
            for b in 0..16 {
                let t = b as f64 / 16.0;
                let w = winding_gauge(s, t);
                for (member, sign) in [(Member::U, -1.0), (Member::V, 1.0)] {
                    let x = DMatrix::from_vec(2, 1, p1.eval(member, s, t));
                    let y = DMatrix::from_vec(2, 1, p0.eval(member, s, t));
                    assert!(cnorm(&(&w * x - y * c(sign, 0.0))) < 1e-10);
                }
            }
        }
    }

    /// Conjugation identity `D_{T_0}(W f) = W D_{-pi I} f` on random smooth
    /// test functions with `f(0, t)` in `i R^2`.
    #[test]
    fn family_start_is_conjugate_of_base() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let t0 = winding_family_field(0.0).unwrap();
        for _ in 0..20 {
            // f = sum_k c_k e^{2 pi i k t} e^{-a s} s + i b, boundary value i b
            let coeffs: Vec<(i32, Vector2<C64>)> = (-2..=2)
                .map(|k| {
                    (k, Vector2::new(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
                })
                .collect();
            let b = Vector2::new(c(0.0, rng.gen_range(-1.0..1.0)), c(0.0, rng.gen_range(-1.0..1.0)));
            let a = rng.gen_range(0.5..3.0);
            for _ in 0..10 {
                let s: f64 = rng.gen_range(0.0..2.0);
                let t: f64 = rng.gen_range(0.0..1.0);
                let (mut f, mut fs, mut ft) = (b * c((-a * s).exp(), 0.0), b * c(-a * (-a * s).exp(), 0.0), Vector2::zeros());
                for (k, ck) in &coeffs {
                    let e = C64::from_polar(s * (-a * s).exp(), 2.0 * PI * *k as f64 * t);
                    let es = C64::from_polar((1.0 - a * s) * (-a * s).exp(), 2.0 * PI * *k as f64 * t);
                    f += ck * e;
                    fs += ck * es;
                    ft += ck * (e * c(0.0, 2.0 * PI * *k as f64));
                }
                let as_mat = |v: Vector2<C64>| DMatrix::from_column_slice(2, 1, v.as_slice());
                let w = WindingGauge.value(s, t);
                let g = &w * as_mat(f);
                let gs = WindingGauge.ds(s, t) * as_mat(f) + &w * as_mat(fs);
                let gt = WindingGauge.dt(s, t) * as_mat(f) + &w * as_mat(ft);
                let lhs_jet = Jet {
                    value: g.iter().copied().collect(),
                    ds: gs.iter().copied().collect(),
                    dt: gt.iter().copied().collect(),
                };
                let lhs = {
                    let v = nalgebra::DVector::from_vec(realify_vec(&lhs_jet.value));
                    let vs = nalgebra::DVector::from_vec(realify_vec(&lhs_jet.ds));
                    let vt = nalgebra::DVector::from_vec(realify_vec(&lhs_jet.dt));
                    vs - j0(2) * vt - t0.matrix(s, t) * v
                };
                let inner = fs - ft * c(0.0, 1.0) + f * c(PI, 0.0);
                let rhs = &w * as_mat(inner);
                let rhs = nalgebra::DVector::from_vec(realify_vec(rhs.as_slice()));
                assert!((lhs - rhs).amax() < 1e-8);
            }
        }
    }

    /// Independent check of the kernel coefficients: solve the boundary
    /// condition `Re W(r, t) sum_k e^{2 pi i k t} c_k = 0` for modes `k <= 8`
    /// and compare the null space with the closed-form coefficients.
    #[test]
    fn truncated_boundary_system_reproduces_coefficients() {
        const MODES: usize = 9;
        const SAMPLES: usize = 48;
        for i in 0..=10 {
            let r = i as f64 / 10.0;
            let cols = MODES * 4;
            let mut a = DMatrix::<f64>::zeros(SAMPLES * 2, cols);
            for j in 0..SAMPLES {
                let t = j as f64 / SAMPLES as f64;
                let w = winding_gauge(r, t);
                for k in 0..MODES {
                    let e = C64::from_polar(1.0, 2.0 * PI * k as f64 * t);
                    for comp in 0..2 {
                        for (part, unit) in [(0usize, c(1.0, 0.0)), (1, c(0.0, 1.0))] {
                            let col = k * 4 + comp * 2 + part;
                            for row in 0..2 {
                                a[(2 * j + row, col)] = (w[(row, comp)] * e * unit).re;
                            }
                        }
                    }
                }
            }
            let svd = a.clone().svd(false, true);
            let vt = svd.v_t.unwrap();
            let mut order: Vec<usize> = (0..cols).collect();
            order.sort_by(|&x, &y| svd.singular_values[x].partial_cmp(&svd.singular_values[y]).unwrap());
            assert!(svd.singular_values[order[1]] < 1e-12);
            assert!(svd.singular_values[order[2]] > 1e-3);
            let null = DMatrix::from_fn(cols, 2, |row, q| vt[(order[q], row)]);
            let pair = kernel_pair(r).unwrap();
            for (a0, a1) in [(pair.u0, pair.u1), (pair.v0, pair.v1)] {
                let mut x = nalgebra::DVector::<f64>::zeros(cols);
                for comp in 0..2 {
                    x[comp * 2] = a0[comp].re;
                    x[comp * 2 + 1] = a0[comp].im;
                    x[4 + comp * 2] = a1[comp].re;
                    x[4 + comp * 2 + 1] = a1[comp].im;
                }
                let proj = &null * (null.transpose() * &x);
                assert!((x - proj).norm() < 1e-10, "r = {r}");
            }
        }
    }

    #[test]
    fn contraction_integral_values() {
        for m in [-2.0, 0.0, 1.0, 3.0] {
            let v = contraction_integral(&|_| m, 5.0).unwrap();
            assert!((v - 1.0).abs() < 1e-8);
        }
        let step = |x: f64| cutoff(x);
        let mut prev = f64::INFINITY;
        for r in [10.0, 100.0, 1000.0] {
            let v = contraction_integral(&step, r).unwrap();
            assert!(v > 0.0);
            assert!((v - 1.0).abs() < prev);
            prev = (v - 1.0).abs();
        }
        assert!(contraction_integral(&|x| 0.5 * cutoff(x), 10.0).is_err());
        assert!(contraction_integral(&step, 0.0).is_err());
    }

    #[test]
    fn contraction_integral_matches_composite_simpson() {
        let step = |x: f64| cutoff(x);
        for r in [0.3, 2.0, 10.0, 100.0] {
            let n = 200_000;
            let h = 8.0 / n as f64;
            let f = |x: f64| {
                let a = 2.0 * PI * step(x / r);
                2.0 * PI * (-2.0 * PI * x).exp() * (a.cos() - a.sin())
            };
            let mut acc = f(0.0) + f(8.0);
            for i in 1..n {
                acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let simpson = acc * h / 3.0;
            let v = contraction_integral(&step, r).unwrap();
            assert!((v - simpson).abs() < 1e-8, "r={r}: {v} vs {simpson}");
        }
    }
}
