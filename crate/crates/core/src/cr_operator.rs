//! Discretized Cauchy-Riemann operators `u -> d_s u - J0 d_t u - S(s, t) u`
//! on the half-cylinder (with `u(0, t)` in `i R^n`) and on the full cylinder,
//! and their numerical kernels, cokernels and indices.
//!
//! The equation is written as the linear ODE `u_s = F(s) u` in `s`, where
//! `F(s) = J0 (x) D_t + S(s, .)` acts on the values of `u` at `2K + 1`
//! equispaced collocation points in `t` and `D_t` is the periodic Fourier
//! differentiation matrix (exact on modes `|k| <= K`). The ODE is discretized
//! on a uniform `s` grid by the fourth-order two-point Hermite scheme
//!
//! ```text
//! (u_{i+1} - u_i) - h/2 (F_i u_i + F_{i+1} u_{i+1})
//!                 + h^2/12 (G_{i+1} u_{i+1} - G_i u_i) = 0,   G = F' + F^2,
//! ```
//!
//! the (2,2) Pade approximant of the propagator, which is A-stable, so the
//! fast Fourier modes need no extra `s` resolution.
//!
//! The boundary condition at `s = 0` is imposed by dropping the real parts
//! from the unknowns. At a truncation end the solution is required to lie in
//! the decaying eigenspace of the asymptotic matrix `F(+-inf)`, which is the
//! exact condition for fields that are constant beyond the truncation. With
//! this choice `cols - rows` equals the analytic index of the operator.
//!
//! Unknowns are grouped by `s` node; within a node the layout is
//! `j * 2n + c` for collocation point `j` and real component `c`
//! (`c < n` real part, `c >= n` imaginary part).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Domain, OperatorField};
use crate::linalg::{j0, orthonormalize, seeded_matrix, BlockTridiagonal, C64};
use crate::symplectic_path::{endpoint_determinant, integrate_symplectic_path, DEGENERACY_THRESHOLD};

/// Resolution of a discretization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    /// Fourier truncation: modes `-K..=K`, i.e. `2K + 1` collocation points.
    #[serde(rename = "K")]
    pub k: usize,
    /// Truncation length in `s`.
    #[serde(rename = "L")]
    pub l: f64,
    /// Number of `s` grid points.
    #[serde(rename = "Ns")]
    pub ns: usize,
}

impl Discretization {
    pub const REFERENCE: Discretization = Discretization {
        k: 16,
        l: 8.0,
        ns: 200,
    };

    pub fn new(k: usize, l: f64, ns: usize) -> Result<Self> {
        let d = Self { k, l, ns };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 4 {
            return Err(Error::ResolutionTooLow(format!("K = {} < 4", self.k)));
        }
        if self.ns < 8 * self.k {
            return Err(Error::ResolutionTooLow(format!(
                "Ns = {} < 8K = {}",
                self.ns,
                8 * self.k
            )));
        }
        if !(self.l >= 4.0) || !self.l.is_finite() {
            return Err(Error::ResolutionTooLow(format!("L = {} < 4", self.l)));
        }
        Ok(())
    }

    pub fn t_points(&self) -> usize {
        2 * self.k + 1
    }

    /// `(2K, 2Ns, L + 2)`.
    pub fn refined(&self) -> Self {
        Self {
            k: 2 * self.k,
            l: self.l + 2.0,
            ns: 2 * self.ns,
        }
    }
}

/// Periodic Fourier differentiation matrix on `N` (odd) equispaced points of
/// `[0, 1)`.
pub fn fourier_differentiation(nt: usize) -> DMatrix<f64> {
    assert!(nt % 2 == 1, "odd number of collocation points required");
    DMatrix::from_fn(nt, nt, |j, l| {
        if j == l {
            0.0
        } else {
            let d = j as i64 - l as i64;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            PI * sign / (PI * d as f64 / nt as f64).sin()
        }
    })
}

/// How the unknowns at one `s` node parametrize the nodal values.
#[derive(Clone, Debug)]
enum NodeBasis {
    /// All `m` nodal values are unknowns.
    Full,
    /// Only the imaginary parts are unknowns (boundary `u in i R^n`).
    Imaginary,
    /// Coefficients in an orthonormal frame (`m x c`) of an invariant subspace.
    Frame(DMatrix<f64>),
}

/// Meaning of one column of the discretized operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnRole {
    /// Nodal value: `s` node, `t` collocation point, real component.
    Nodal {
        s_index: usize,
        t_index: usize,
        component: usize,
    },
    /// Coefficient of an asymptotic eigenvector at a truncation end.
    Asymptotic { s_index: usize, mode: usize },
}

/// Sparse block-bidiagonal realization of a discretized operator.
///
/// Rows are grouped by `s` interval; interval `i` couples node `i` (through
/// `left[i]`) and node `i + 1` (through `right[i]`). Rows carry the factor
/// `h` of the scheme.
#[derive(Clone, Debug)]
pub struct DiscretizedOperator {
    n: usize,
    domain: Domain,
    disc: Discretization,
    s_nodes: Vec<f64>,
    nodes: Vec<NodeBasis>,
    col_offsets: Vec<usize>,
    left: Vec<DMatrix<f64>>,
    right: Vec<DMatrix<f64>>,
}

/// `F(s)` and `F'(s)` on the collocation grid.
fn coefficient_matrices(field: &dyn OperatorField, dt: &DMatrix<f64>, s: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = field.n();
    let nt = dt.nrows();
    let m = 2 * n * nt;
    let j = j0(n);
    let mut f = DMatrix::zeros(m, m);
    let mut fs = DMatrix::zeros(m, m);
    for a in 0..nt {
        let t = a as f64 / nt as f64;
        let sm = field.matrix(s, t);
        f.view_mut((a * 2 * n, a * 2 * n), (2 * n, 2 * n)).copy_from(&sm);
        fs.view_mut((a * 2 * n, a * 2 * n), (2 * n, 2 * n))
            .copy_from(&field.matrix_ds(s, t));
        for b in 0..nt {
            let d = dt[(a, b)];
            if d != 0.0 {
                let mut blk = f.view_mut((a * 2 * n, b * 2 * n), (2 * n, 2 * n));
                blk += &j * d;
            }
        }
    }
    (f, fs)
}

/// Orthonormal eigenvectors of the symmetric part of `f` with eigenvalues of
/// the requested sign.
fn signed_eigenspace(f: &DMatrix<f64>, negative: bool) -> Result<DMatrix<f64>> {
    let sym = (f + f.transpose()) * 0.5;
    let scale = sym.amax().max(1.0);
    let eig = sym.symmetric_eigen();
    let mut picks: Vec<(f64, usize)> = Vec::new();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() < 1e-9 * scale {
            return Err(Error::Degenerate { det: lambda.abs() / scale });
        }
        if (lambda < 0.0) == negative {
            picks.push((lambda, i));
        }
    }
    picks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(DMatrix::from_fn(f.nrows(), picks.len(), |r, c| {
        eig.eigenvectors[(r, picks[c].1)]
    }))
}

fn check_asymptotics(field: &dyn OperatorField, disc: &Discretization) -> Result<()> {
    if disc.l < field.transition_end() {
        return Err(Error::ResolutionTooLow(format!(
            "L = {} does not reach the asymptotic region (|s| >= {})",
            disc.l,
            field.transition_end()
        )));
    }
    let mut loops = vec![field.plus_loop()];
    if let Some(m) = field.minus_loop() {
        loops.push(m);
    }
    for lp in loops {
        let path = integrate_symplectic_path(&lp, 256)?;
        let det = endpoint_determinant(&path);
        if det <= DEGENERACY_THRESHOLD {
            return Err(Error::Degenerate { det });
        }
    }
    Ok(())
}

impl DiscretizedOperator {
    /// Half-cylinder operator on `[0, L]` with `u(0, t)` in `i R^n`.
    pub fn half_cylinder(field: &dyn OperatorField, disc: &Discretization) -> Result<Self> {
        disc.validate()?;
        if field.domain() != Domain::Half {
            return Err(Error::InvalidInput("field is not a half-cylinder field".into()));
        }
        check_asymptotics(field, disc)?;
        let s_nodes: Vec<f64> = (0..disc.ns)
            .map(|i| disc.l * i as f64 / (disc.ns - 1) as f64)
            .collect();
        Self::assemble(field, disc, s_nodes, Domain::Half)
    }

    /// Full-cylinder operator on `[-L, L]`.
    pub fn full_cylinder(field: &dyn OperatorField, disc: &Discretization) -> Result<Self> {
        disc.validate()?;
        if field.domain() != Domain::Full || field.minus_loop().is_none() {
            return Err(Error::InvalidInput("field is not a full-cylinder field".into()));
        }
        check_asymptotics(field, disc)?;
        let s_nodes: Vec<f64> = (0..disc.ns)
            .map(|i| -disc.l + 2.0 * disc.l * i as f64 / (disc.ns - 1) as f64)
            .collect();
        Self::assemble(field, disc, s_nodes, Domain::Full)
    }

    /// Dispatches on the field's domain.
    pub fn assemble_for(field: &dyn OperatorField, disc: &Discretization) -> Result<Self> {
        match field.domain() {
            Domain::Half => Self::half_cylinder(field, disc),
            Domain::Full => Self::full_cylinder(field, disc),
        }
    }

    fn assemble(
        field: &dyn OperatorField,
        disc: &Discretization,
        s_nodes: Vec<f64>,
        domain: Domain,
    ) -> Result<Self> {
        let n = field.n();
        let nt = disc.t_points();
        let m = 2 * n * nt;
        let dt = fourier_differentiation(nt);
        let ns = s_nodes.len();
        let h = s_nodes[1] - s_nodes[0];

        let (fs, gs): (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) = s_nodes
            .par_iter()
            .map(|&s| {
                let (f, fds) = coefficient_matrices(field, &dt, s);
                let g = fds + &f * &f;
                (f, g)
            })
            .unzip();

        let mut nodes = Vec::with_capacity(ns);
        nodes.push(match domain {
            Domain::Half => NodeBasis::Imaginary,
            Domain::Full => NodeBasis::Frame(signed_eigenspace(&fs[0], false)?),
        });
        for _ in 1..ns - 1 {
            nodes.push(NodeBasis::Full);
        }
        nodes.push(NodeBasis::Frame(signed_eigenspace(&fs[ns - 1], true)?));

        let mut col_offsets = Vec::with_capacity(ns + 1);
        col_offsets.push(0);
        for node in &nodes {
            let c = node_size(node, m);
            col_offsets.push(col_offsets.last().unwrap() + c);
        }

        let id = DMatrix::<f64>::identity(m, m);
        let mut left = Vec::with_capacity(ns - 1);
        let mut right = Vec::with_capacity(ns - 1);
        for i in 0..ns - 1 {
            let l = -&id - &fs[i] * (0.5 * h) - &gs[i] * (h * h / 12.0);
            let r = &id - &fs[i + 1] * (0.5 * h) + &gs[i + 1] * (h * h / 12.0);
            left.push(restrict_columns(&l, &nodes[i], n, nt));
            right.push(restrict_columns(&r, &nodes[i + 1], n, nt));
        }
        Ok(Self {
            n,
            domain,
            disc: *disc,
            s_nodes,
            nodes,
            col_offsets,
            left,
            right,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn s_nodes(&self) -> &[f64] {
        &self.s_nodes
    }

    /// Real unknowns per `s` node before boundary elimination.
    pub fn node_dim(&self) -> usize {
        2 * self.n * self.disc.t_points()
    }

    pub fn rows(&self) -> usize {
        self.left.len() * self.node_dim()
    }

    pub fn cols(&self) -> usize {
        *self.col_offsets.last().unwrap()
    }

    /// `cols - rows`: the index the discretization is built to reproduce.
    pub fn structural_index(&self) -> i64 {
        self.cols() as i64 - self.rows() as i64
    }

    pub fn column_role(&self, col: usize) -> Option<ColumnRole> {
        if col >= self.cols() {
            return None;
        }
        let node = self.col_offsets.partition_point(|&o| o <= col) - 1;
        let local = col - self.col_offsets[node];
        let two_n = 2 * self.n;
        Some(match &self.nodes[node] {
            NodeBasis::Full => ColumnRole::Nodal {
                s_index: node,
                t_index: local / two_n,
                component: local % two_n,
            },
            NodeBasis::Imaginary => ColumnRole::Nodal {
                s_index: node,
                t_index: local / self.n,
                component: self.n + local % self.n,
            },
            NodeBasis::Frame(_) => ColumnRole::Asymptotic {
                s_index: node,
                mode: local,
            },
        })
    }

    fn node_cols(&self, i: usize) -> std::ops::Range<usize> {
        self.col_offsets[i]..self.col_offsets[i + 1]
    }

    /// `A x`.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.node_dim();
        let k = x.ncols();
        let mut y = DMatrix::zeros(self.rows(), k);
        for i in 0..self.left.len() {
            let a = self.node_cols(i);
            let b = self.node_cols(i + 1);
            let mut blk = y.view_mut((i * m, 0), (m, k));
            blk += &self.left[i] * x.rows(a.start, a.len());
            blk += &self.right[i] * x.rows(b.start, b.len());
        }
        y
    }

    /// `A^T y`.
    pub fn apply_transpose(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.node_dim();
        let k = y.ncols();
        let mut x = DMatrix::zeros(self.cols(), k);
        for i in 0..self.left.len() {
            let a = self.node_cols(i);
            let b = self.node_cols(i + 1);
            let yi = y.rows(i * m, m);
            let mut xa = x.rows_mut(a.start, a.len());
            xa += self.left[i].transpose() * yi;
            let mut xb = x.rows_mut(b.start, b.len());
            xb += self.right[i].transpose() * yi;
        }
        x
    }

    /// `A^T A` as a block-tridiagonal matrix over `s` nodes.
    pub fn normal_matrix(&self) -> BlockTridiagonal {
        let ns = self.nodes.len();
        let mut diag: Vec<DMatrix<f64>> = (0..ns)
            .map(|i| DMatrix::zeros(self.node_cols(i).len(), self.node_cols(i).len()))
            .collect();
        let mut sub = Vec::with_capacity(ns - 1);
        for i in 0..ns - 1 {
            diag[i] += self.left[i].transpose() * &self.left[i];
            diag[i + 1] += self.right[i].transpose() * &self.right[i];
            sub.push(self.right[i].transpose() * &self.left[i]);
        }
        BlockTridiagonal { diag, sub }
    }

    /// `A A^T` as a block-tridiagonal matrix over `s` intervals.
    pub fn co_normal_matrix(&self) -> BlockTridiagonal {
        let ni = self.left.len();
        let diag = (0..ni)
            .map(|i| {
                &self.left[i] * self.left[i].transpose() + &self.right[i] * self.right[i].transpose()
            })
            .collect();
        let sub = (0..ni.saturating_sub(1))
            .map(|i| &self.left[i + 1] * self.right[i].transpose())
            .collect();
        BlockTridiagonal { diag, sub }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.apply(&DMatrix::identity(self.cols(), self.cols()))
    }

    /// Nodal values (length `node_dim` each) of a coefficient vector.
    pub fn nodal_values(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let m = self.node_dim();
        let n = self.n;
        (0..self.nodes.len())
            .map(|i| {
                let xs = x.rows(self.col_offsets[i], self.node_cols(i).len());
                match &self.nodes[i] {
                    NodeBasis::Full => xs.clone_owned(),
                    NodeBasis::Imaginary => {
                        let mut v = DVector::zeros(m);
                        for (local, val) in xs.iter().enumerate() {
                            v[(local / n) * 2 * n + n + local % n] = *val;
                        }
                        v
                    }
                    NodeBasis::Frame(b) => b * xs,
                }
            })
            .collect()
    }

    /// Coefficient vector of nodal values; the inverse of [`Self::nodal_values`]
    /// on its range, and the orthogonal projection onto it otherwise.
    pub fn coefficients(&self, nodal: &[DVector<f64>]) -> DVector<f64> {
        let n = self.n;
        let mut x = DVector::zeros(self.cols());
        for (i, v) in nodal.iter().enumerate() {
            let off = self.col_offsets[i];
            match &self.nodes[i] {
                NodeBasis::Full => x.rows_mut(off, v.len()).copy_from(v),
                NodeBasis::Imaginary => {
                    for local in 0..self.node_cols(i).len() {
                        x[off + local] = v[(local / n) * 2 * n + n + local % n];
                    }
                }
                NodeBasis::Frame(b) => {
                    let c = b.transpose() * v;
                    x.rows_mut(off, c.len()).copy_from(&c);
                }
            }
        }
        x
    }

    /// Samples a `C^n`-valued function at the grid and returns its coefficients.
    pub fn discretize(&self, f: impl Fn(f64, f64) -> Vec<C64>) -> DVector<f64> {
        let nt = self.disc.t_points();
        let n = self.n;
        let nodal: Vec<DVector<f64>> = self
            .s_nodes
            .iter()
            .map(|&s| {
                let mut v = DVector::zeros(self.node_dim());
                for j in 0..nt {
                    let z = f(s, j as f64 / nt as f64);
                    for c in 0..n {
                        v[j * 2 * n + c] = z[c].re;
                        v[j * 2 * n + n + c] = z[c].im;
                    }
                }
                v
            })
            .collect();
        self.coefficients(&nodal)
    }

    /// Trapezoidal `L^2([s_0, s_end] x T)` inner product of nodal values.
    pub fn l2_inner(&self, a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
        let h = self.s_nodes[1] - self.s_nodes[0];
        let last = a.len() - 1;
        let nt = self.disc.t_points() as f64;
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| {
                let w = if i == 0 || i == last { 0.5 } else { 1.0 };
                w * x.dot(y)
            })
            .sum::<f64>()
            * h
            / nt
    }

    /// `||A x|| / ||x||`.
    pub fn relative_residual(&self, x: &DVector<f64>) -> f64 {
        let xm = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
        self.apply(&xm).norm() / x.norm()
    }
}

fn node_size(node: &NodeBasis, m: usize) -> usize {
    match node {
        NodeBasis::Full => m,
        NodeBasis::Imaginary => m / 2,
        NodeBasis::Frame(b) => b.ncols(),
    }
}

fn restrict_columns(block: &DMatrix<f64>, node: &NodeBasis, n: usize, nt: usize) -> DMatrix<f64> {
    match node {
        NodeBasis::Full => block.clone(),
        NodeBasis::Imaginary => {
            let cols: Vec<usize> = (0..nt)
                .flat_map(|j| (0..n).map(move |c| j * 2 * n + n + c))
                .collect();
            block.select_columns(&cols)
        }
        NodeBasis::Frame(b) => block * b,
    }
}

/// Singular-value gap policy for numerical kernels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TolPolicy {
    /// Required ratio `sigma_{d+1} / sigma_d` at the reported dimension.
    pub gap_ratio: f64,
    /// Singular values below `floor * scale` are treated as zero.
    pub floor: f64,
    /// Initial and maximal block sizes of the subspace iteration.
    pub block: usize,
    pub max_block: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TolPolicy {
    fn default() -> Self {
        Self {
            gap_ratio: 1e3,
            floor: 1e-12,
            block: 8,
            max_block: 64,
            iterations: 6,
            seed: 0x5eed,
        }
    }
}

/// Ordered orthonormal basis of a numerical kernel with its gap certificate.
#[derive(Clone, Debug)]
pub struct KernelFrame {
    /// `cols x d`, orthonormal columns in canonical order and sign.
    pub vectors: DMatrix<f64>,
    /// Smallest singular values found (ascending), including `d + 1` at least.
    pub singular_values: Vec<f64>,
    /// `sigma_{d+1} / max(sigma_d, floor)`.
    pub gap: f64,
}

impl KernelFrame {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.transpose() * &self.vectors;
        (g - DMatrix::<f64>::identity(self.dim(), self.dim())).amax()
    }
}

struct NullSpace {
    vectors: DMatrix<f64>,
    singular_values: Vec<f64>,
    gap: f64,
}

fn orthonormal_columns(x: DMatrix<f64>) -> DMatrix<f64> {
    x.qr().q()
}

/// Null space of an operator through shift-invert subspace iteration on its
/// Gram matrix `G = B^T B`, followed by a Rayleigh-Ritz step with `B`.
fn null_space(
    gram: &BlockTridiagonal,
    apply: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
    policy: &TolPolicy,
) -> Result<NullSpace> {
    let dim = gram.dim();
    if dim == 0 {
        return Ok(NullSpace {
            vectors: DMatrix::zeros(0, 0),
            singular_values: vec![],
            gap: f64::INFINITY,
        });
    }
    let scale = gram.max_diag().sqrt().max(f64::MIN_POSITIVE);
    let floor = policy.floor * scale;
    let chol = gram.cholesky(1e-10 * scale * scale)?;
    let mut p = policy.block.min(dim).max(1);
    let mut best_ratio = 0.0_f64;
    loop {
        let mut x = orthonormal_columns(seeded_matrix(dim, p, policy.seed ^ p as u64));
        for _ in 0..policy.iterations {
            chol.solve_mut(&mut x);
            x = orthonormal_columns(x);
        }
        let y = apply(&x);
        let svd = y.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[a]
                .partial_cmp(&svd.singular_values[b])
                .unwrap()
        });
        let sigmas: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        // ratio for dimension d is sigma_{d+1} / max(sigma_d, floor), sigma_0 = floor
        let mut d_best = 0;
        let mut ratio_best = 0.0;
        for d in 0..sigmas.len() {
            let below = if d == 0 { floor } else { sigmas[d - 1].max(floor) };
            let ratio = sigmas[d] / below;
            if ratio > ratio_best {
                ratio_best = ratio;
                d_best = d;
            }
        }
        let all_null = sigmas.iter().all(|&s| s <= floor);
        if all_null && p == dim {
            d_best = p;
            ratio_best = f64::INFINITY;
        }
        best_ratio = best_ratio.max(ratio_best);
        if ratio_best >= policy.gap_ratio && (d_best < p || p == dim) {
            let coeff = DMatrix::from_fn(p, d_best, |r, c| vt[(order[c], r)]);
            return Ok(NullSpace {
                vectors: &x * coeff,
                singular_values: sigmas,
                gap: ratio_best,
            });
        }
        if p >= policy.max_block.min(dim) {
            return Err(Error::NoSpectralGap {
                best_ratio,
                count: sigmas.len(),
            });
        }
        p = (2 * p).min(policy.max_block).min(dim);
    }
}

/// Deterministic frame of a subspace: greedily pick the coordinate direction
/// with the largest remaining projection (lowest index on ties), then make the
/// largest-magnitude entry of each vector positive.
pub fn canonical_frame(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let d = basis.ncols();
    let mut rows = basis.clone();
    let mut coeffs: Vec<DVector<f64>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut best = (0usize, -1.0);
        for j in 0..rows.nrows() {
            let nrm = rows.row(j).norm();
            if nrm > best.1 {
                best = (j, nrm);
            }
        }
        let c = rows.row(best.0).transpose() / best.1;
        // remove the chosen direction from every row
        let proj = &rows * &c;
        rows -= proj * c.transpose();
        coeffs.push(c);
    }
    let mut frame = DMatrix::zeros(basis.nrows(), d);
    for (k, c) in coeffs.iter().enumerate() {
        let mut v = basis * c;
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        frame.set_column(k, &v);
    }
    frame
}

/// Numerical kernel of `A`.
pub fn numerical_kernel(op: &DiscretizedOperator, policy: &TolPolicy) -> Result<KernelFrame> {
    let ns = null_space(&op.normal_matrix(), |x| op.apply(x), policy)?;
    let vectors = if ns.vectors.ncols() > 0 {
        canonical_frame(&orthonormalize(&ns.vectors)?)
    } else {
        DMatrix::zeros(op.cols(), 0)
    };
    Ok(KernelFrame {
        vectors,
        singular_values: ns.singular_values,
        gap: ns.gap,
    })
}

/// Numerical kernel of `A^T`.
pub fn numerical_cokernel(op: &DiscretizedOperator, policy: &TolPolicy) -> Result<KernelFrame> {
    let ns = null_space(&op.co_normal_matrix(), |y| op.apply_transpose(y), policy)?;
    let vectors = if ns.vectors.ncols() > 0 {
        canonical_frame(&orthonormalize(&ns.vectors)?)
    } else {
        DMatrix::zeros(op.rows(), 0)
    };
    Ok(KernelFrame {
        vectors,
        singular_values: ns.singular_values,
        gap: ns.gap,
    })
}

/// Kernel and cokernel dimensions and the index they imply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IndexEstimate {
    pub kernel: usize,
    pub cokernel: usize,
    pub index: i64,
}

/// `dim ker A - dim ker A^T`, required to agree with `cols - rows`.
pub fn fredholm_index_estimate(op: &DiscretizedOperator, policy: &TolPolicy) -> Result<IndexEstimate> {
    let (k, c) = rayon::join(|| numerical_kernel(op, policy), || numerical_cokernel(op, policy));
    let (k, c) = (k?.dim(), c?.dim());
    let index = k as i64 - c as i64;
    if index != op.structural_index() {
        return Err(Error::InconsistentIndex {
            kernel: k,
            cokernel: c,
            structural: op.structural_index(),
        });
    }
    Ok(IndexEstimate {
        kernel: k,
        cokernel: c,
        index,
    })
}

/// Relative `L^2` distance from `exact` to the span of `approx` (best scalar
/// multiple), both given as coefficient vectors of `op`.
pub fn relative_l2_error(op: &DiscretizedOperator, approx: &DVector<f64>, exact: &DVector<f64>) -> f64 {
    let a = op.nodal_values(approx);
    let e = op.nodal_values(exact);
    let alpha = op.l2_inner(&a, &e) / op.l2_inner(&a, &a);
    let diff: Vec<DVector<f64>> = a.iter().zip(&e).map(|(x, y)| y - x * alpha).collect();
    (op.l2_inner(&diff, &diff) / op.l2_inner(&e, &e)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ConstantField, InterpolatedField};
    use crate::linalg::max_abs;
    use crate::symplectic_path::SymmetricLoop;

    fn small() -> Discretization {
        Discretization::new(4, 4.0, 32).unwrap()
    }

    #[test]
    fn differentiation_matrix_is_exact_on_trig_polynomials() {
        let nt = 9;
        let d = fourier_differentiation(nt);
        for k in 0..=4 {
            let f = DVector::from_fn(nt, |j, _| (2.0 * PI * k as f64 * j as f64 / nt as f64).sin());
            let df = DVector::from_fn(nt, |j, _| {
                2.0 * PI * k as f64 * (2.0 * PI * k as f64 * j as f64 / nt as f64).cos()
            });
            assert!((&d * f - df).amax() < 1e-11);
        }
        assert!(max_abs(&(&d + d.transpose())) < 1e-12);
    }

    #[test]
    fn resolution_limits() {
        assert!(Discretization::new(3, 8.0, 200).is_err());
        assert!(Discretization::new(16, 8.0, 100).is_err());
        assert!(Discretization::new(16, 3.0, 200).is_err());
        assert!(Discretization::new(4, 4.0, 32).is_ok());
    }

    #[test]
    fn sparse_products_match_dense() {
        let f = ConstantField::scalar(1, -PI, Domain::Half);
        let op = DiscretizedOperator::half_cylinder(&f, &small()).unwrap();
        let a = op.to_dense();
        let x = seeded_matrix(op.cols(), 3, 1);
        let y = seeded_matrix(op.rows(), 2, 2);
        assert!(max_abs(&(op.apply(&x) - &a * &x)) < 1e-12);
        assert!(max_abs(&(op.apply_transpose(&y) - a.transpose() * &y)) < 1e-12);
        let ata = a.transpose() * &a;
        let nm = op.normal_matrix();
        let mut off = 0;
        for (i, blk) in nm.diag.iter().enumerate() {
            let sz = blk.nrows();
            assert!(max_abs(&(blk - ata.view((off, off), (sz, sz)))) < 1e-12, "diag {i}");
            if i + 1 < nm.diag.len() {
                let sz2 = nm.diag[i + 1].nrows();
                assert!(max_abs(&(&nm.sub[i] - ata.view((off + sz, off), (sz2, sz)))) < 1e-12);
            }
            off += sz;
        }
        let aat = &a * a.transpose();
        let cn = op.co_normal_matrix();
        let m = op.node_dim();
        for i in 0..cn.diag.len() {
            assert!(max_abs(&(&cn.diag[i] - aat.view((i * m, i * m), (m, m)))) < 1e-12);
            if i + 1 < cn.diag.len() {
                assert!(max_abs(&(&cn.sub[i] - aat.view(((i + 1) * m, i * m), (m, m)))) < 1e-12);
            }
        }
    }

    #[test]
    fn structural_counts_match_analytic_indices() {
        let d = small();
        for (n, c, idx) in [(1, -PI, 1), (1, -3.0 * PI, 3), (2, -PI, 2), (1, PI, -1)] {
            let f = ConstantField::scalar(n, c, Domain::Half);
            let op = DiscretizedOperator::half_cylinder(&f, &d).unwrap();
            assert_eq!(op.structural_index(), idx);
        }
        let full = InterpolatedField::new(SymmetricLoop::scalar(1, -PI), SymmetricLoop::scalar(1, -3.0 * PI)).unwrap();
        let op = DiscretizedOperator::full_cylinder(&full, &d).unwrap();
        assert_eq!(op.structural_index(), 2);
    }

    #[test]
    fn degenerate_and_mismatched_fields_rejected() {
        let d = small();
        let zero = ConstantField::scalar(1, 0.0, Domain::Half);
        assert!(matches!(
            DiscretizedOperator::half_cylinder(&zero, &d),
            Err(Error::Degenerate { .. })
        ));
        let full = ConstantField::scalar(1, -PI, Domain::Full);
        assert!(DiscretizedOperator::half_cylinder(&full, &d).is_err());
        let zero_full = ConstantField::scalar(1, 0.0, Domain::Full);
        assert!(DiscretizedOperator::full_cylinder(&zero_full, &d).is_err());
    }

    #[test]
    fn small_kernel_matches_dense_svd() {
        let f = ConstantField::scalar(1, -3.0 * PI, Domain::Half);
        let op = DiscretizedOperator::half_cylinder(&f, &small()).unwrap();
        let k = numerical_kernel(&op, &TolPolicy::default()).unwrap();
        assert_eq!(k.dim(), 3);
        let a = op.to_dense();
        let svd = a.clone().svd(false, false);
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // rows < cols: the dense SVD has cols - rows implicit zeros beyond its list
        assert!(s[0] > 1e-3);
        assert!(max_abs(&(&a * &k.vectors)) < 1e-10);
        assert!(k.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn canonical_frame_is_basis_independent() {
        let b = orthonormalize(&seeded_matrix(10, 3, 4)).unwrap();
        let rot = orthonormalize(&seeded_matrix(3, 3, 5)).unwrap();
        let f1 = canonical_frame(&b);
        let f2 = canonical_frame(&(&b * rot));
        assert!(max_abs(&(f1 - f2)) < 1e-12);
    }

    #[test]
    fn column_roles_and_round_trip() {
        let f = ConstantField::scalar(2, -PI, Domain::Half);
        let op = DiscretizedOperator::half_cylinder(&f, &small()).unwrap();
        assert_eq!(
            op.column_role(0),
            Some(ColumnRole::Nodal { s_index: 0, t_index: 0, component: 2 })
        );
        assert_eq!(
            op.column_role(3),
            Some(ColumnRole::Nodal { s_index: 0, t_index: 1, component: 3 })
        );
        assert!(matches!(op.column_role(op.cols() - 1), Some(ColumnRole::Asymptotic { .. })));
        assert_eq!(op.column_role(op.cols()), None);
        let x = DVector::from_column_slice(seeded_matrix(op.cols(), 1, 9).as_slice());
        let back = op.coefficients(&op.nodal_values(&x));
        assert!((back - x).amax() < 1e-12);
    }
}
