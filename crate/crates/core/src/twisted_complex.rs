//! Graded complexes with `epsilon` and `delta` edge signs: standard and
//! twisted boundary operators, gauge changes, chain-map checks and integer
//! homology via Smith normal form.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spin_lift::{delta_sign, SoLoop};

/// Dense integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            data: entries.iter().map(|&x| BigInt::from(x)).collect(),
        })
    }

    pub fn diagonal(entries: &[i64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m.data[i * entries.len() + i] = BigInt::from(x);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn add_to(&mut self, i: usize, j: usize, x: i64) {
        self.data[i * self.cols + j] += x;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn row_vectors(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} minus {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }
}

impl Serialize for IntMatrix {
    /// Nested rows; entries beyond `i64` are written as decimal strings.
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.rows))?;
        for row in self.row_vectors() {
            seq.serialize_element(&BigInts(&row))?;
        }
        seq.end()
    }
}

struct BigInts<'a>(&'a [BigInt]);

impl Serialize for BigInts<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_bigints(self.0, s)
    }
}

fn min_nonzero(a: &[Vec<BigInt>], cells: impl Iterator<Item = (usize, usize)>) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, j) in cells {
        if a[i][j].is_zero() {
            continue;
        }
        if best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
            best = Some((i, j));
        }
    }
    best
}

/// Nonzero invariant factors of `m` (positive, each dividing the next).
pub fn invariant_factors(m: &IntMatrix) -> Vec<BigInt> {
    let (r, c) = (m.rows, m.cols);
    let mut a = m.row_vectors();
    let mut factors = Vec::new();
    for t in 0..r.min(c) {
        let Some((pi, pj)) = min_nonzero(&a, (t..r).flat_map(|i| (t..c).map(move |j| (i, j)))) else {
            break;
        };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut clean = true;
            for i in t + 1..r {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&a[t][t]);
                for j in t..c {
                    let d = &q * &a[t][j];
                    a[i][j] -= d;
                }
                clean &= a[i][t].is_zero();
            }
            for j in t + 1..c {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&a[t][t]);
                for i in t..r {
                    let d = &q * &a[i][t];
                    a[i][j] -= d;
                }
                clean &= a[t][j].is_zero();
            }
            if !clean {
                let cells = (t..r).map(|i| (i, t)).chain((t + 1..c).map(|j| (t, j)));
                let (pi, pj) = min_nonzero(&a, cells).expect("pivot row/column is nonzero");
                a.swap(t, pi);
                for row in a.iter_mut() {
                    row.swap(t, pj);
                }
                continue;
            }
            // the pivot must divide the remaining block
            let bad = (t + 1..r).find(|&i| (t + 1..c).any(|j| !a[i][j].is_multiple_of(&a[t][t])));
            match bad {
                Some(i) => {
                    for j in t..c {
                        let x = a[i][j].clone();
                        a[t][j] += x;
                    }
                }
                None => break,
            }
        }
        factors.push(a[t][t].abs());
    }
    factors
}

pub fn rank(m: &IntMatrix) -> usize {
    invariant_factors(m).len()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub id: String,
    pub grade: i64,
    /// Trivialization class relative to a reference, if tracked.
    pub loop_class: Option<SoLoop>,
}

impl Generator {
    pub fn new(id: impl Into<String>, grade: i64) -> Self {
        Self {
            id: id.into(),
            grade,
            loop_class: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub epsilon: i8,
    /// Resolved `delta` sign.
    pub delta: i8,
    /// The loop `delta` was resolved from, if given as a loop.
    pub delta_loop: Option<SoLoop>,
}

fn check_sign(name: &str, x: i8) -> Result<()> {
    if x != 1 && x != -1 {
        return Err(Error::InvalidInput(format!("{name} must be +1 or -1, got {x}")));
    }
    Ok(())
}

impl Edge {
    pub fn new(source: impl Into<String>, target: impl Into<String>, epsilon: i8, delta: i8) -> Result<Self> {
        check_sign("epsilon", epsilon)?;
        check_sign("delta", delta)?;
        Ok(Self {
            source: source.into(),
            target: target.into(),
            epsilon,
            delta,
            delta_loop: None,
        })
    }

    /// Resolves `delta` from a loop in `SO(n)` through its spin lift.
    pub fn with_loop(
        source: impl Into<String>,
        target: impl Into<String>,
        epsilon: i8,
        delta_loop: SoLoop,
    ) -> Result<Self> {
        let delta = delta_sign(&delta_loop)?;
        let mut e = Self::new(source, target, epsilon, delta)?;
        e.delta_loop = Some(delta_loop);
        Ok(e)
    }

    fn weight(&self, twisted: bool) -> i64 {
        let w = self.epsilon as i64;
        if twisted {
            w * self.delta as i64
        } else {
            w
        }
    }
}

/// Two broken trajectories `(u, v)` and `(u_alt, v_alt)` from `x` to `z`
/// closing off one one-dimensional component; indices into the edge list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Quadruple {
    pub u: usize,
    pub v: usize,
    pub u_alt: usize,
    pub v_alt: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexDatum {
    generators: Vec<Generator>,
    edges: Vec<Edge>,
    quadruples: Vec<Quadruple>,
    index: HashMap<String, usize>,
}

impl ComplexDatum {
    /// Validates ids, grades, signs and the shape of each quadruple. Whether
    /// the boundaries square to zero is checked separately.
    pub fn new(generators: Vec<Generator>, edges: Vec<Edge>, quadruples: Vec<Quadruple>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, g) in generators.iter().enumerate() {
            if index.insert(g.id.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate generator id {:?}", g.id)));
            }
        }
        let grade = |id: &str| -> Result<i64> {
            index
                .get(id)
                .map(|&i| generators[i].grade)
                .ok_or_else(|| Error::InvalidInput(format!("unknown generator {id:?}")))
        };
        for (k, e) in edges.iter().enumerate() {
            check_sign("epsilon", e.epsilon)?;
            check_sign("delta", e.delta)?;
            let (gs, gt) = (grade(&e.source)?, grade(&e.target)?);
            if gs != gt + 1 {
                return Err(Error::InvalidInput(format!(
                    "edge {k} ({} -> {}) has grade gap {}, expected 1",
                    e.source,
                    e.target,
                    gs - gt
                )));
            }
        }
        for (k, q) in quadruples.iter().enumerate() {
            let get = |i: usize| {
                edges
                    .get(i)
                    .ok_or_else(|| Error::InvalidInput(format!("quadruple {k} refers to missing edge {i}")))
            };
            let (u, v, u2, v2) = (get(q.u)?, get(q.v)?, get(q.u_alt)?, get(q.v_alt)?);
            let ok = u.target == v.source
                && u2.target == v2.source
                && u.source == u2.source
                && v.target == v2.target
                && (q.u, q.v) != (q.u_alt, q.v_alt);
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "quadruple {k} is not two distinct broken trajectories with common ends"
                )));
            }
        }
        Ok(Self {
            generators,
            edges,
            quadruples,
            index,
        })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn quadruples(&self) -> &[Quadruple] {
        &self.quadruples
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Smallest and largest grade, if any generators exist.
    pub fn grade_range(&self) -> Option<(i64, i64)> {
        let min = self.generators.iter().map(|g| g.grade).min()?;
        let max = self.generators.iter().map(|g| g.grade).max()?;
        Some((min, max))
    }

    /// Generator positions of grade `k`, in input order.
    pub fn basis(&self, k: i64) -> Vec<usize> {
        (0..self.generators.len()).filter(|&i| self.generators[i].grade == k).collect()
    }

    /// Indices of quadruples violating `delta(u) delta(v) = delta(u') delta(v')`.
    pub fn cpr_violations(&self) -> Vec<usize> {
        let d = |i: usize| self.edges[i].delta;
        self.quadruples
            .iter()
            .enumerate()
            .filter(|(_, q)| d(q.u) * d(q.v) != d(q.u_alt) * d(q.v_alt))
            .map(|(k, _)| k)
            .collect()
    }

    /// Accepts the datum as a complex: both boundaries square to zero and
    /// every quadruple satisfies the consistency identity.
    pub fn validate(&self) -> Result<()> {
        for twisted in [false, true] {
            if let Some((k, _)) = boundary_squared_defects(self, twisted).into_iter().next() {
                return Err(Error::NotAComplex(format!(
                    "{} boundary squared is nonzero from degree {k}",
                    flavor_name(twisted)
                )));
            }
        }
        if let Some(&k) = self.cpr_violations().first() {
            return Err(Error::NotAComplex(format!("quadruple {k} violates delta consistency")));
        }
        Ok(())
    }
}

fn flavor_name(twisted: bool) -> &'static str {
    if twisted {
        "twisted"
    } else {
        "standard"
    }
}

/// Boundary matrices by degree: `maps[k]` sends grade `k` to grade `k - 1`,
/// columns and rows in [`ComplexDatum::basis`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMatrices {
    pub twisted: bool,
    pub maps: BTreeMap<i64, IntMatrix>,
}

pub fn boundary_matrices(c: &ComplexDatum, twisted: bool) -> BoundaryMatrices {
    let mut maps = BTreeMap::new();
    let Some((lo, hi)) = c.grade_range() else {
        return BoundaryMatrices { twisted, maps };
    };
    let mut pos = vec![0usize; c.generators.len()];
    for k in lo..=hi {
        for (p, i) in c.basis(k).into_iter().enumerate() {
            pos[i] = p;
        }
    }
    for k in lo + 1..=hi {
        maps.insert(k, IntMatrix::zeros(c.basis(k - 1).len(), c.basis(k).len()));
    }
    for e in &c.edges {
        let s = c.index[&e.source];
        let t = c.index[&e.target];
        let m = maps.get_mut(&c.generators[s].grade).expect("grade gap checked");
        m.add_to(pos[t], pos[s], e.weight(twisted));
    }
    BoundaryMatrices { twisted, maps }
}

/// Nonzero compositions `d_{k-1} d_k`, keyed by `k`.
pub fn boundary_squared_defects(c: &ComplexDatum, twisted: bool) -> Vec<(i64, IntMatrix)> {
    let b = boundary_matrices(c, twisted);
    b.maps
        .iter()
        .filter_map(|(&k, dk)| {
            let lower = b.maps.get(&(k - 1))?;
            let sq = lower.mul(dk).expect("consecutive degrees compose");
            (!sq.is_zero()).then_some((k, sq))
        })
        .collect()
}

pub fn check_boundary_squared(c: &ComplexDatum, twisted: bool) -> bool {
    boundary_squared_defects(c, twisted).is_empty()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomologyGroup {
    pub degree: i64,
    pub free_rank: usize,
    /// Invariant factors greater than one.
    #[serde(serialize_with = "serialize_bigints")]
    pub torsion: Vec<BigInt>,
}

fn serialize_bigints<S: serde::Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        match i64::try_from(x) {
            Ok(small) => seq.serialize_element(&small)?,
            Err(_) => seq.serialize_element(&x.to_string())?,
        }
    }
    seq.end()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntegerHomology {
    pub groups: Vec<HomologyGroup>,
}

impl IntegerHomology {
    pub fn degree(&self, k: i64) -> Option<&HomologyGroup> {
        self.groups.iter().find(|g| g.degree == k)
    }
}

pub fn homology(c: &ComplexDatum, twisted: bool) -> Result<IntegerHomology> {
    if let Some((k, _)) = boundary_squared_defects(c, twisted).into_iter().next() {
        return Err(Error::NotAComplex(format!(
            "{} boundary squared is nonzero from degree {k}",
            flavor_name(twisted)
        )));
    }
    let Some((lo, hi)) = c.grade_range() else {
        return Ok(IntegerHomology { groups: Vec::new() });
    };
    let b = boundary_matrices(c, twisted);
    let factors: BTreeMap<i64, Vec<BigInt>> = {
        use rayon::prelude::*;
        b.maps
            .par_iter()
            .map(|(&k, m)| (k, invariant_factors(m)))
            .collect()
    };
    let groups = (lo..=hi)
        .map(|k| {
            let dim = c.basis(k).len();
            let out_rank = factors.get(&k).map_or(0, |f| f.len());
            let incoming = factors.get(&(k + 1)).cloned().unwrap_or_default();
            HomologyGroup {
                degree: k,
                free_rank: dim - out_rank - incoming.len(),
                torsion: incoming.into_iter().filter(|d| !d.is_one()).collect(),
            }
        })
        .collect();
    Ok(IntegerHomology { groups })
}

/// Changes `delta` by the per-generator signs `c`: `delta(e) c(src) c(tgt)`.
pub fn gauge_by_signs(c: &ComplexDatum, signs: &[i8]) -> Result<ComplexDatum> {
    if signs.len() != c.generators.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} signs for {} generators",
            signs.len(),
            c.generators.len()
        )));
    }
    for &s in signs {
        check_sign("gauge sign", s)?;
    }
    let mut out = c.clone();
    for e in &mut out.edges {
        e.delta *= signs[c.index[&e.source]] * signs[c.index[&e.target]];
        // the stored loop no longer represents the new class
        e.delta_loop = None;
    }
    Ok(out)
}

/// Changes each generator's trivialization by an `SO(n)` loop. Edge signs
/// pick up the lift parities of both endpoint loops; `epsilon` is unchanged.
pub fn gauge_transform(c: &ComplexDatum, loops: &BTreeMap<String, SoLoop>) -> Result<ComplexDatum> {
    let mut signs = Vec::with_capacity(c.generators.len());
    for g in &c.generators {
        let lp = loops
            .get(&g.id)
            .ok_or_else(|| Error::InvalidInput(format!("no loop for generator {:?}", g.id)))?;
        signs.push(delta_sign(lp)?);
    }
    let mut out = gauge_by_signs(c, &signs)?;
    for g in &mut out.generators {
        let lp = &loops[&g.id];
        g.loop_class = Some(match &g.loop_class {
            Some(old) => old.pointwise(lp)?,
            None => lp.clone(),
        });
    }
    Ok(out)
}

/// A loop in `SO(n)` with lift parity `sign`.
pub fn loop_with_parity(sign: i8, n: usize, samples: usize) -> Result<SoLoop> {
    if sign == 1 {
        Ok(SoLoop::constant(n, samples))
    } else {
        SoLoop::planar_rotation(n, 1, samples)
    }
}

/// Largest generator count accepted by [`find_coboundary`].
pub const MAX_BRUTE_FORCE: usize = 20;

/// Searches all sign functions `c` for one with `delta(e) = c(src) c(tgt)`
/// on every edge.
pub fn find_coboundary(c: &ComplexDatum) -> Result<Option<Vec<i8>>> {
    let n = c.generators.len();
    if n > MAX_BRUTE_FORCE {
        return Err(Error::InvalidInput(format!(
            "{n} generators exceed the brute-force limit {MAX_BRUTE_FORCE}"
        )));
    }
    let ends: Vec<(usize, usize, bool)> = c
        .edges
        .iter()
        .map(|e| (c.index[&e.source], c.index[&e.target], e.delta < 0))
        .collect();
    for mask in 0u32..(1u32 << n) {
        let neg = |i: usize| mask >> i & 1 == 1;
        if ends.iter().all(|&(s, t, d)| (neg(s) ^ neg(t)) == d) {
            return Ok(Some((0..n).map(|i| if neg(i) { -1 } else { 1 }).collect()));
        }
    }
    Ok(None)
}

pub type GradedMap = BTreeMap<i64, IntMatrix>;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainMapReport {
    pub commutes: bool,
    /// `Theta_{k-1} d_k - d'_k Theta_k` for each degree where it is nonzero.
    pub defects: BTreeMap<i64, IntMatrix>,
    /// Every `Theta_k` is square and unimodular.
    pub isomorphism: bool,
}

/// Checks `d' Theta = Theta d` degree-wise, where `d` is `source_boundary`
/// (missing degrees are zero) and `d'` the chosen boundary of `target`.
/// `theta` must have a matrix for every grade of `target`.
pub fn verify_chain_map(
    theta: &GradedMap,
    source_boundary: &GradedMap,
    target: &ComplexDatum,
    twisted: bool,
) -> Result<ChainMapReport> {
    let tb = boundary_matrices(target, twisted);
    let Some((lo, hi)) = target.grade_range() else {
        return Ok(ChainMapReport {
            commutes: true,
            defects: BTreeMap::new(),
            isomorphism: theta.values().all(|m| m.rows == 0 && m.cols == 0),
        });
    };
    for k in lo..=hi {
        let th = theta
            .get(&k)
            .ok_or_else(|| Error::DimensionMismatch(format!("no chain map component in degree {k}")))?;
        if th.rows != target.basis(k).len() {
            return Err(Error::DimensionMismatch(format!(
                "degree {k}: map has {} rows, target has {} generators",
                th.rows,
                target.basis(k).len()
            )));
        }
    }
    for (&k, d) in source_boundary {
        let (Some(th), Some(lower)) = (theta.get(&k), theta.get(&(k - 1))) else {
            return Err(Error::DimensionMismatch(format!("source boundary in degree {k} outside the map's range")));
        };
        if d.cols != th.cols || d.rows != lower.cols {
            return Err(Error::DimensionMismatch(format!(
                "degree {k}: source boundary is {}x{}, expected {}x{}",
                d.rows, d.cols, lower.cols, th.cols
            )));
        }
    }
    let mut defects = BTreeMap::new();
    for k in lo + 1..=hi {
        let (th, lower) = (&theta[&k], &theta[&(k - 1)]);
        let src = source_boundary
            .get(&k)
            .cloned()
            .unwrap_or_else(|| IntMatrix::zeros(lower.cols, th.cols));
        let defect = lower.mul(&src)?.sub(&tb.maps[&k].mul(th)?)?;
        if !defect.is_zero() {
            defects.insert(k, defect);
        }
    }
    let isomorphism = theta.values().all(|m| {
        m.rows == m.cols && {
            let f = invariant_factors(m);
            f.len() == m.rows && f.iter().all(|d| d.is_one())
        }
    });
    Ok(ChainMapReport {
        commutes: defects.is_empty(),
        defects,
        isomorphism,
    })
}

/// Grades of the random data run from 0 to this value.
pub const RANDOM_TOP_GRADE: i64 = 3;
/// Largest generator count of the random data.
pub const RANDOM_MAX_GENERATORS: usize = 12;

struct Factor {
    /// Grade (0 or 1) of each generator.
    grades: Vec<i64>,
    /// `(source, target, epsilon, delta)`.
    edges: Vec<(usize, usize, i8, i8)>,
}

fn random_sign(rng: &mut ChaCha8Rng) -> i8 {
    if rng.gen_bool(0.5) {
        1
    } else {
        -1
    }
}

fn random_factor(rng: &mut ChaCha8Rng, size: usize) -> Factor {
    let top = rng.gen_range(1..size);
    let mut grades = vec![1; top];
    grades.resize(size, 0);
    let mut edges = Vec::new();
    for s in 0..top {
        for t in top..size {
            for _ in 0..rng.gen_range(0..=2) {
                edges.push((s, t, random_sign(rng), random_sign(rng)));
            }
        }
    }
    Factor { grades, edges }
}

/// Seeded random complex built from its broken pairs.
///
/// Three two-level pieces with arbitrary edge signs are multiplied; every
/// broken pair then uses edges from two different pieces and is closed off
/// by the pair taking the same two edges in the other order, whose Koszul
/// signs make `epsilon` cancel while `delta` agrees. Generator
/// reorientations, a random gauge and a shuffle are applied on top.
pub fn random_datum(seed: u64) -> ComplexDatum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const SIZES: [[usize; 3]; 4] = [[2, 2, 2], [2, 2, 3], [2, 3, 2], [3, 2, 2]];
    let sizes = SIZES[rng.gen_range(0..SIZES.len())];
    let factors: Vec<Factor> = sizes.iter().map(|&s| random_factor(&mut rng, s)).collect();

    let tuples: Vec<Vec<usize>> = sizes
        .iter()
        .fold(vec![vec![]], |acc, &s| {
            acc.into_iter()
                .flat_map(|t| {
                    (0..s).map(move |i| {
                        let mut t = t.clone();
                        t.push(i);
                        t
                    })
                })
                .collect()
        });
    let position: HashMap<Vec<usize>, usize> = tuples.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    let grade_of = |t: &[usize]| -> i64 { t.iter().zip(&factors).map(|(&i, f)| f.grades[i]).sum() };

    // edges keyed by (tuple, factor, factor edge)
    let mut edge_ids: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut raw_edges: Vec<(usize, usize, i8, i8)> = Vec::new();
    for (ti, t) in tuples.iter().enumerate() {
        for (fi, f) in factors.iter().enumerate() {
            let koszul: i64 = t[..fi].iter().zip(&factors).map(|(&i, g)| g.grades[i]).sum();
            let sign: i8 = if koszul % 2 == 0 { 1 } else { -1 };
            for (ei, &(s, tg, eps, del)) in f.edges.iter().enumerate() {
                if t[fi] != s {
                    continue;
                }
                let mut to = t.clone();
                to[fi] = tg;
                edge_ids.insert((ti, fi, ei), raw_edges.len());
                raw_edges.push((ti, position[&to], eps * sign, del));
            }
        }
    }
    let mut quads = Vec::new();
    for (ti, t) in tuples.iter().enumerate() {
        for i in 0..factors.len() {
            for j in i + 1..factors.len() {
                for (ei, &(si, ti_tgt, _, _)) in factors[i].edges.iter().enumerate() {
                    if t[i] != si {
                        continue;
                    }
                    for (ej, &(sj, tj_tgt, _, _)) in factors[j].edges.iter().enumerate() {
                        if t[j] != sj {
                            continue;
                        }
                        let mut after_i = t.clone();
                        after_i[i] = ti_tgt;
                        let mut after_j = t.clone();
                        after_j[j] = tj_tgt;
                        quads.push(Quadruple {
                            u: edge_ids[&(ti, i, ei)],
                            v: edge_ids[&(position[&after_i], j, ej)],
                            u_alt: edge_ids[&(ti, j, ej)],
                            v_alt: edge_ids[&(position[&after_j], i, ei)],
                        });
                    }
                }
            }
        }
    }

    let n = tuples.len();
    let flips: Vec<i8> = (0..n).map(|_| random_sign(&mut rng)).collect();
    let gauge: Vec<i8> = (0..n).map(|_| random_sign(&mut rng)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edge_order: Vec<usize> = (0..raw_edges.len()).collect();
    edge_order.shuffle(&mut rng);
    let mut edge_pos = vec![0usize; raw_edges.len()];
    for (p, &e) in edge_order.iter().enumerate() {
        edge_pos[e] = p;
    }

    let id = |i: usize| format!("g{}", order.iter().position(|&o| o == i).unwrap());
    let generators = order.iter().map(|&i| Generator::new(id(i), grade_of(&tuples[i]))).collect();
    let edges = edge_order
        .iter()
        .map(|&e| {
            let (s, t, eps, del) = raw_edges[e];
            Edge::new(id(s), id(t), eps * flips[s] * flips[t], del * gauge[s] * gauge[t]).expect("signs are units")
        })
        .collect();
    let quadruples = quads
        .into_iter()
        .map(|q| Quadruple {
            u: edge_pos[q.u],
            v: edge_pos[q.v],
            u_alt: edge_pos[q.u_alt],
            v_alt: edge_pos[q.v_alt],
        })
        .collect();
    ComplexDatum::new(generators, edges, quadruples).expect("constructed consistently")
}

/// The two-edge model: `x` (grade 1), `y` (grade 0), two edges `x -> y`
/// with `epsilon = +1` and `delta = +1, -1`.
pub fn two_edge_model() -> ComplexDatum {
    ComplexDatum::new(
        vec![Generator::new("x", 1), Generator::new("y", 0)],
        vec![Edge::new("x", "y", 1, 1).unwrap(), Edge::new("x", "y", 1, -1).unwrap()],
        vec![],
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(h: &IntegerHomology, k: i64) -> (usize, Vec<i64>) {
        let g = h.degree(k).unwrap();
        (g.free_rank, g.torsion.iter().map(|x| i64::try_from(x).unwrap()).collect())
    }

    #[test]
    fn single_generator() {
        let c = ComplexDatum::new(vec![Generator::new("x", 0)], vec![], vec![]).unwrap();
        assert!(boundary_matrices(&c, true).maps.is_empty());
        assert_eq!(group(&homology(&c, false).unwrap(), 0), (1, vec![]));
        let empty = ComplexDatum::new(vec![], vec![], vec![]).unwrap();
        assert!(check_boundary_squared(&empty, false));
        assert!(homology(&empty, true).unwrap().groups.is_empty());
    }

    #[test]
    fn two_edge_model_homology() {
        let c = two_edge_model();
        assert_eq!(boundary_matrices(&c, false).maps[&1], IntMatrix::from_i64(1, 1, &[2]).unwrap());
        assert!(boundary_matrices(&c, true).maps[&1].is_zero());
        let std = homology(&c, false).unwrap();
        assert_eq!(group(&std, 0), (0, vec![2]));
        assert_eq!(group(&std, 1), (0, vec![]));
        let tw = homology(&c, true).unwrap();
        assert_eq!(group(&tw, 0), (1, vec![]));
        assert_eq!(group(&tw, 1), (1, vec![]));
        assert_eq!(find_coboundary(&c).unwrap(), None);
    }

    #[test]
    fn opposite_epsilons_cancel() {
        let c = ComplexDatum::new(
            vec![Generator::new("x", 1), Generator::new("y", 0)],
            vec![Edge::new("x", "y", 1, 1).unwrap(), Edge::new("x", "y", -1, 1).unwrap()],
            vec![],
        )
        .unwrap();
        assert!(boundary_matrices(&c, false).maps[&1].is_zero());
        assert!(boundary_matrices(&c, true).maps[&1].is_zero());
    }

    #[test]
    fn consistency_violation_is_detected() {
        let gens = vec![
            Generator::new("x", 2),
            Generator::new("y", 1),
            Generator::new("y2", 1),
            Generator::new("z", 0),
        ];
        let edges = vec![
            Edge::new("x", "y", 1, -1).unwrap(),
            Edge::new("y", "z", 1, 1).unwrap(),
            Edge::new("x", "y2", 1, 1).unwrap(),
            Edge::new("y2", "z", -1, 1).unwrap(),
        ];
        let q = Quadruple {
            u: 0,
            v: 1,
            u_alt: 2,
            v_alt: 3,
        };
        let c = ComplexDatum::new(gens, edges, vec![q]).unwrap();
        assert!(check_boundary_squared(&c, false));
        assert!(!check_boundary_squared(&c, true));
        assert_eq!(c.cpr_violations(), vec![0]);
        let defects = boundary_squared_defects(&c, true);
        assert_eq!(defects[0].1, IntMatrix::from_i64(1, 1, &[-2]).unwrap());
        assert!(c.validate().is_err());
        assert!(homology(&c, true).is_err());
    }

    #[test]
    fn gauge_on_two_edge_model() {
        let c = two_edge_model();
        let mut loops = BTreeMap::new();
        loops.insert("x".to_string(), SoLoop::planar_rotation(2, 1, 64).unwrap());
        loops.insert("y".to_string(), SoLoop::constant(2, 64));
        let g = gauge_transform(&c, &loops).unwrap();
        let deltas: Vec<i8> = g.edges().iter().map(|e| e.delta).collect();
        assert_eq!(deltas, vec![-1, 1]);
        assert!(boundary_matrices(&g, true).maps[&1].is_zero());
        assert_eq!(homology(&g, true).unwrap(), homology(&c, true).unwrap());
        loops.remove("y");
        assert!(gauge_transform(&c, &loops).is_err());
        let trivial: BTreeMap<_, _> = ["x", "y"].iter().map(|id| (id.to_string(), SoLoop::constant(2, 16))).collect();
        let same = gauge_transform(&c, &trivial).unwrap();
        assert_eq!(boundary_matrices(&same, true), boundary_matrices(&c, true));
    }

    #[test]
    fn coboundary_data_trivialize() {
        // x -> y, x -> y', y -> z, y' -> z with delta = c(src) c(tgt)
        let c_signs = [-1i8, 1, -1, 1];
        let ids = ["x", "y", "y2", "z"];
        let gens = vec![
            Generator::new("x", 2),
            Generator::new("y", 1),
            Generator::new("y2", 1),
            Generator::new("z", 0),
        ];
        let pairs = [(0, 1, 1), (1, 3, 1), (0, 2, 1), (2, 3, -1)];
        let edges = pairs
            .iter()
            .map(|&(s, t, eps)| Edge::new(ids[s], ids[t], eps, c_signs[s] * c_signs[t]).unwrap())
            .collect();
        let c = ComplexDatum::new(gens, edges, vec![Quadruple { u: 0, v: 1, u_alt: 2, v_alt: 3 }]).unwrap();
        c.validate().unwrap();
        let found = find_coboundary(&c).unwrap().unwrap();
        let loops: BTreeMap<_, _> = ids
            .iter()
            .zip(&found)
            .map(|(id, &s)| (id.to_string(), loop_with_parity(s, 2, 64).unwrap()))
            .collect();
        let g = gauge_transform(&c, &loops).unwrap();
        assert_eq!(boundary_matrices(&g, true).maps, boundary_matrices(&g, false).maps);
        assert_eq!(homology(&c, true).unwrap(), homology(&c, false).unwrap());
        // chain map: diagonal signs intertwine the standard and twisted boundaries
        let std = boundary_matrices(&c, false).maps;
        let theta: GradedMap = (0..=2)
            .map(|k| {
                let diag: Vec<i64> = c.basis(k).iter().map(|&i| found[i] as i64).collect();
                (k, IntMatrix::diagonal(&diag))
            })
            .collect();
        let rep = verify_chain_map(&theta, &std, &c, true).unwrap();
        assert!(rep.commutes && rep.isomorphism);
    }

    #[test]
    fn chain_map_defect_on_two_edge_model() {
        let c = two_edge_model();
        let std = boundary_matrices(&c, false).maps;
        let theta: GradedMap = [(0, IntMatrix::identity(1)), (1, IntMatrix::identity(1))].into();
        let rep = verify_chain_map(&theta, &std, &c, true).unwrap();
        assert!(!rep.commutes);
        assert!(rep.isomorphism);
        assert_eq!(rep.defects[&1], IntMatrix::from_i64(1, 1, &[2]).unwrap());
        let tw = boundary_matrices(&c, true).maps;
        assert!(verify_chain_map(&theta, &tw, &c, true).unwrap().commutes);
        let bad: GradedMap = [(1, IntMatrix::identity(1))].into();
        assert!(verify_chain_map(&bad, &std, &c, true).is_err());
    }

    #[test]
    fn snf_small_cases() {
        let m = IntMatrix::from_i64(2, 2, &[2, 4, 6, 8]).unwrap();
        assert_eq!(invariant_factors(&m), vec![BigInt::from(2), BigInt::from(4)]);
        let m = IntMatrix::from_i64(2, 3, &[6, 0, 0, 0, 4, 0]).unwrap();
        assert_eq!(invariant_factors(&m), vec![BigInt::from(2), BigInt::from(12)]);
        assert!(invariant_factors(&IntMatrix::zeros(3, 2)).is_empty());
    }

    #[test]
    fn random_data_close_all_broken_pairs() {
        for seed in 0..20 {
            let c = random_datum(seed);
            assert!(c.generators().len() <= RANDOM_MAX_GENERATORS);
            c.validate().unwrap();
            // every broken pair occurs in exactly one quadruple
            let mut count: HashMap<(usize, usize), usize> = HashMap::new();
            for q in c.quadruples() {
                *count.entry((q.u, q.v)).or_default() += 1;
                *count.entry((q.u_alt, q.v_alt)).or_default() += 1;
            }
            for (a, ea) in c.edges().iter().enumerate() {
                for (b, eb) in c.edges().iter().enumerate() {
                    if ea.target == eb.source {
                        assert_eq!(count.get(&(a, b)), Some(&1), "seed {seed}");
                    }
                }
            }
        }
    }
}
