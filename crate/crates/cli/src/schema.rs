//! Versioned JSON input documents and their conversion into core objects.
//!
//! Every document carries `"schema": "cr-orient/1"` and a `"type"` tag.
//! Conversion never stops at the first problem: all issues are collected
//! with JSON pointers and reported together.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use cr_orient::analytic_oracles::{minus_pi_field, winding_family_field, winding_gauge_field, winding_gauge_squared};
use cr_orient::cr_operator::Discretization;
use cr_orient::field::{ConstantField, InterpolatedField, SampledField};
use cr_orient::spin_lift::SoLoop;
use cr_orient::twisted_complex::{ComplexDatum, Edge, Generator, Quadruple};
use cr_orient::unitary::{boundary_loop, IdentityField, PadIdentity, PhaseRamp, Product, RotationBump};
use cr_orient::{Domain, SharedField, SharedUnitary, SymmetricLoop};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{Collector, SourceMap};
use crate::{CliError, SCHEMA};

pub type Matrix = Vec<Vec<f64>>;

/// Symmetric loop `S(t)` of real `2n x 2n` matrices.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopSpec {
    Scalar { n: usize, c: f64 },
    Constant { matrix: Matrix },
    Sampled { samples: Vec<Matrix> },
}

/// Coefficient field of an operator.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// `"minus_pi_I"` (with `n`), `"T_r"` (with `r`), or `"W"`: the
    /// conjugate of the `-pi I` operator by the winding gauge.
    Named {
        name: String,
        #[serde(default)]
        r: Option<f64>,
        #[serde(default)]
        n: Option<usize>,
    },
    Scalar {
        n: usize,
        c: f64,
        #[serde(default = "half")]
        domain: Domain,
    },
    Constant {
        matrix: Matrix,
        #[serde(default = "half")]
        domain: Domain,
    },
    /// Full-cylinder blend between two asymptotic loops.
    Interpolated { minus: LoopSpec, plus: LoopSpec },
    /// `samples[i][j] = S(s_i, t_j)` on uniform grids.
    Sampled {
        #[serde(default = "half")]
        domain: Domain,
        s_min: f64,
        s_max: f64,
        samples: Vec<Vec<Matrix>>,
    },
}

fn half() -> Domain {
    Domain::Half
}

/// Unitary gauge `U(s, t)`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UnitarySpec {
    /// `"W"` or `"W2"`.
    Named { name: String },
    Identity { n: usize },
    RotationBump { amplitude: f64 },
    PhaseRamp { turns: i32 },
    Product { left: Box<UnitarySpec>, right: Box<UnitarySpec> },
    Pad { inner: Box<UnitarySpec>, extra: usize },
}

/// Loop in `SO(n)`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SoLoopSpec {
    Samples { samples: Vec<Matrix> },
    Planar { n: usize, turns: i64, samples: usize },
    Axis { axis: [f64; 3], turns: i64, samples: usize },
    /// `t -> U(0, t)`, optionally padded by an identity block.
    Boundary {
        unitary: UnitarySpec,
        samples: usize,
        #[serde(default)]
        pad: usize,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub id: String,
    pub grade: i64,
    #[serde(default, rename = "loop")]
    pub loop_class: Option<SoLoopSpec>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Sign(i8),
    Loop {
        #[serde(rename = "loop")]
        lp: SoLoopSpec,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub src: String,
    pub tgt: String,
    pub eps: i8,
    pub delta: DeltaSpec,
}

/// Edge indices `[u, v, u_alt, v_alt]`.
pub type QuadrupleSpec = [usize; 4];

/// Optional overrides of the suite defaults.
#[derive(Clone, Debug, Default)]
pub struct SuiteConfigSpec {
    pub reference: Option<Discretization>,
    pub transport: Option<Discretization>,
    pub transport_grid: Option<usize>,
    pub random_complexes: Option<usize>,
    pub homotopy_trials: Option<usize>,
}

/// Top-level input document.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Document {
    SymmetricLoop {
        schema: String,
        #[serde(rename = "loop")]
        lp: LoopSpec,
        #[serde(default)]
        steps: Option<usize>,
    },
    Field {
        schema: String,
        field: FieldSpec,
    },
    Unitary {
        schema: String,
        unitary: UnitarySpec,
        #[serde(default)]
        base: Option<FieldSpec>,
    },
    SoLoop {
        schema: String,
        #[serde(rename = "loop")]
        lp: SoLoopSpec,
    },
    Complex {
        schema: String,
        generators: Vec<GeneratorSpec>,
        #[serde(default)]
        edges: Vec<EdgeSpec>,
        #[serde(default)]
        quadruples: Vec<QuadrupleSpec>,
    },
    SuiteConfig {
        schema: String,
        #[serde(default)]
        reference: Option<Discretization>,
        #[serde(default)]
        transport: Option<Discretization>,
        #[serde(default)]
        transport_grid: Option<usize>,
        #[serde(default)]
        random_complexes: Option<usize>,
        #[serde(default)]
        homotopy_trials: Option<usize>,
    },
}

impl Document {
    pub fn type_name(&self) -> &'static str {
        match self {
            Document::SymmetricLoop { .. } => "symmetric_loop",
            Document::Field { .. } => "field",
            Document::Unitary { .. } => "unitary",
            Document::SoLoop { .. } => "so_loop",
            Document::Complex { .. } => "complex",
            Document::SuiteConfig { .. } => "suite_config",
        }
    }

    fn schema(&self) -> &str {
        match self {
            Document::SymmetricLoop { schema, .. }
            | Document::Field { schema, .. }
            | Document::Unitary { schema, .. }
            | Document::SoLoop { schema, .. }
            | Document::Complex { schema, .. }
            | Document::SuiteConfig { schema, .. } => schema,
        }
    }
}

/// A checked document converted to core objects.
#[derive(Clone, Debug)]
pub enum Built {
    SymmetricLoop { lp: SymmetricLoop, steps: Option<usize> },
    Field(SharedField),
    Unitary { unitary: SharedUnitary, base: Option<SharedField> },
    SoLoop(SoLoop),
    Complex(ComplexDatum),
    SuiteConfig(crate::suite::SuiteConfig),
}

fn matrix(rows: &Matrix, ptr: &str, out: &mut Collector) -> Option<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        out.push(ptr, "matrix is empty");
        return None;
    }
    let cols = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        out.push(format!("{ptr}/{i}"), format!("row has {} entries, expected {cols}", rows[i].len()));
        return None;
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        out.push(ptr, "matrix has non-finite entries");
        return None;
    }
    Some(DMatrix::from_fn(n, cols, |i, j| rows[i][j]))
}

fn matrices(list: &[Matrix], ptr: &str, out: &mut Collector) -> Option<Vec<DMatrix<f64>>> {
    if list.is_empty() {
        out.push(ptr, "at least one sample is required");
        return None;
    }
    let ms: Vec<Option<DMatrix<f64>>> = list
        .iter()
        .enumerate()
        .map(|(i, m)| matrix(m, &format!("{ptr}/{i}"), out))
        .collect();
    ms.into_iter().collect()
}

impl LoopSpec {
    pub fn build(&self, ptr: &str, out: &mut Collector) -> Option<SymmetricLoop> {
        match self {
            LoopSpec::Scalar { n, c } => {
                if *n == 0 {
                    out.push(format!("{ptr}/n"), "n must be positive");
                    return None;
                }
                Some(SymmetricLoop::scalar(*n, *c))
            }
            LoopSpec::Constant { matrix: m } => {
                let m = matrix(m, &format!("{ptr}/matrix"), out)?;
                out.check(&format!("{ptr}/matrix"), SymmetricLoop::constant(m))
            }
            LoopSpec::Sampled { samples } => {
                let p = format!("{ptr}/samples");
                let ms = matrices(samples, &p, out)?;
                // check each sample on its own so every offender is named
                let mut ok = true;
                for (i, m) in ms.iter().enumerate() {
                    if let Err(e) = SymmetricLoop::constant(m.clone()) {
                        out.push(format!("{p}/{i}"), format!("sample {i}: {e}"));
                        ok = false;
                    } else if m.nrows() != ms[0].nrows() {
                        out.push(format!("{p}/{i}"), format!("sample {i} has a different size"));
                        ok = false;
                    }
                }
                if !ok {
                    return None;
                }
                out.check(&p, SymmetricLoop::sampled(ms))
            }
        }
    }
}

impl FieldSpec {
    pub fn build(&self, ptr: &str, out: &mut Collector) -> Option<SharedField> {
        match self {
            FieldSpec::Named { name, r, n } => match name.as_str() {
                "minus_pi_I" => {
                    let n = n.unwrap_or(2);
                    if n == 0 {
                        out.push(format!("{ptr}/n"), "n must be positive");
                        return None;
                    }
                    Some(minus_pi_field(n))
                }
                "T_r" | "W" => {
                    if name == "T_r" && r.is_none() {
                        out.push(ptr, "T_r needs a parameter r");
                        return None;
                    }
                    let r = if name == "W" { 0.0 } else { r.unwrap_or(0.0) };
                    if n.is_some_and(|n| n != 2) {
                        out.push(format!("{ptr}/n"), format!("{name} is only defined for n = 2"));
                        return None;
                    }
                    let f = out.check(&format!("{ptr}/r"), winding_family_field(r))?;
                    Some(Arc::new(f))
                }
                other => {
                    out.push(format!("{ptr}/name"), format!("unknown field {other:?} (expected minus_pi_I, T_r or W)"));
                    None
                }
            },
            FieldSpec::Scalar { n, c, domain } => {
                if *n == 0 {
                    out.push(format!("{ptr}/n"), "n must be positive");
                    return None;
                }
                Some(Arc::new(ConstantField::scalar(*n, *c, *domain)))
            }
            FieldSpec::Constant { matrix: m, domain } => {
                let p = format!("{ptr}/matrix");
                let m = matrix(m, &p, out)?;
                Some(Arc::new(out.check(&p, ConstantField::new(m, *domain))?))
            }
            FieldSpec::Interpolated { minus, plus } => {
                let a = minus.build(&format!("{ptr}/minus"), out);
                let b = plus.build(&format!("{ptr}/plus"), out);
                let f = out.check(ptr, InterpolatedField::new(a?, b?))?;
                Some(Arc::new(f))
            }
            FieldSpec::Sampled {
                domain,
                s_min,
                s_max,
                samples,
            } => {
                let p = format!("{ptr}/samples");
                let rows: Vec<Option<Vec<DMatrix<f64>>>> = samples
                    .iter()
                    .enumerate()
                    .map(|(i, row)| matrices(row, &format!("{p}/{i}"), out))
                    .collect();
                let rows: Vec<Vec<DMatrix<f64>>> = rows.into_iter().collect::<Option<_>>()?;
                Some(Arc::new(out.check(&p, SampledField::new(*domain, *s_min, *s_max, rows))?))
            }
        }
    }
}

impl UnitarySpec {
    pub fn build(&self, ptr: &str, out: &mut Collector) -> Option<SharedUnitary> {
        Some(match self {
            UnitarySpec::Named { name } => match name.as_str() {
                "W" => winding_gauge_field(),
                "W2" => winding_gauge_squared(),
                other => {
                    out.push(format!("{ptr}/name"), format!("unknown gauge {other:?} (expected W or W2)"));
                    return None;
                }
            },
            UnitarySpec::Identity { n } => {
                if *n == 0 {
                    out.push(format!("{ptr}/n"), "n must be positive");
                    return None;
                }
                Arc::new(IdentityField { n: *n })
            }
            UnitarySpec::RotationBump { amplitude } => Arc::new(RotationBump { amplitude: *amplitude }),
            UnitarySpec::PhaseRamp { turns } => Arc::new(PhaseRamp { turns: *turns }),
            UnitarySpec::Product { left, right } => {
                let l = left.build(&format!("{ptr}/left"), out);
                let r = right.build(&format!("{ptr}/right"), out);
                Arc::new(out.check(ptr, Product::new(l?, r?))?)
            }
            UnitarySpec::Pad { inner, extra } => Arc::new(PadIdentity {
                inner: inner.build(&format!("{ptr}/inner"), out)?,
                extra: *extra,
            }),
        })
    }
}

impl SoLoopSpec {
    pub fn build(&self, ptr: &str, out: &mut Collector) -> Option<SoLoop> {
        match self {
            SoLoopSpec::Samples { samples } => {
                let p = format!("{ptr}/samples");
                let ms = matrices(samples, &p, out)?;
                let mut ok = true;
                for (i, m) in ms.iter().enumerate() {
                    if let Err(e) = SoLoop::new(vec![m.clone()]) {
                        out.push(format!("{p}/{i}"), format!("sample {i}: {e}").replace("sample 0 ", ""));
                        ok = false;
                    }
                }
                if !ok {
                    return None;
                }
                out.check(&p, SoLoop::new(ms))
            }
            SoLoopSpec::Planar { n, turns, samples } => {
                out.check(ptr, SoLoop::planar_rotation(*n, *turns, (*samples).max(1)))
            }
            SoLoopSpec::Axis { axis, turns, samples } => {
                out.check(ptr, SoLoop::axis_rotation(*axis, *turns, (*samples).max(1)))
            }
            SoLoopSpec::Boundary { unitary, samples, pad } => {
                let u = unitary.build(&format!("{ptr}/unitary"), out)?;
                let lp = out.check(ptr, SoLoop::new(boundary_loop(&*u, (*samples).max(1))))?;
                Some(lp.pad(*pad))
            }
        }
    }
}

fn build_complex(
    generators: &[GeneratorSpec],
    edges: &[EdgeSpec],
    quadruples: &[QuadrupleSpec],
    out: &mut Collector,
) -> Option<ComplexDatum> {
    let mut grades: HashMap<&str, i64> = HashMap::new();
    let mut gens = Vec::new();
    for (i, g) in generators.iter().enumerate() {
        let p = format!("/generators/{i}");
        if grades.insert(&g.id, g.grade).is_some() {
            out.push(format!("{p}/id"), format!("duplicate generator id {:?}", g.id));
        }
        let mut gen = Generator::new(g.id.clone(), g.grade);
        if let Some(spec) = &g.loop_class {
            gen.loop_class = spec.build(&format!("{p}/loop"), out);
        }
        gens.push(gen);
    }
    let mut built = Vec::new();
    for (i, e) in edges.iter().enumerate() {
        let p = format!("/edges/{i}");
        let name = format!("edge {i} ({} -> {})", e.src, e.tgt);
        let (s, t) = (grades.get(e.src.as_str()), grades.get(e.tgt.as_str()));
        if s.is_none() {
            out.push(format!("{p}/src"), format!("{name}: unknown generator {:?}", e.src));
        }
        if t.is_none() {
            out.push(format!("{p}/tgt"), format!("{name}: unknown generator {:?}", e.tgt));
        }
        if let (Some(&s), Some(&t)) = (s, t) {
            if s != t + 1 {
                out.push(p.clone(), format!("{name} has grade gap {}, expected 1", s - t));
            }
        }
        if e.eps != 1 && e.eps != -1 {
            out.push(format!("{p}/eps"), format!("{name}: eps must be +1 or -1"));
        }
        let edge = match &e.delta {
            DeltaSpec::Sign(d) => {
                if *d != 1 && *d != -1 {
                    out.push(format!("{p}/delta"), format!("{name}: delta must be +1 or -1"));
                }
                Edge::new(e.src.clone(), e.tgt.clone(), e.eps, *d).ok()
            }
            DeltaSpec::Loop { lp } => {
                let lp = lp.build(&format!("{p}/delta/loop"), out);
                lp.and_then(|lp| out.check(&format!("{p}/delta/loop"), Edge::with_loop(e.src.clone(), e.tgt.clone(), e.eps, lp)))
            }
        };
        built.push(edge);
    }
    let quads: Vec<Quadruple> = quadruples
        .iter()
        .map(|q| Quadruple {
            u: q[0],
            v: q[1],
            u_alt: q[2],
            v_alt: q[3],
        })
        .collect();
    if !out.is_empty() {
        return None;
    }
    let edges: Vec<Edge> = built.into_iter().collect::<Option<_>>()?;
    // quadruple shape errors name their index; report them at the entry
    for (i, q) in quads.iter().enumerate() {
        if let Err(e) = ComplexDatum::new(gens.clone(), edges.clone(), vec![*q]) {
            out.push(format!("/quadruples/{i}"), e.to_string().replace("quadruple 0", &format!("quadruple {i}")));
        }
    }
    if !out.is_empty() {
        return None;
    }
    let c = out.check("", ComplexDatum::new(gens, edges, quads))?;
    out.check("/edges", c.validate())?;
    Some(c)
}

impl Document {
    /// Semantic checks and conversion; problems are recorded in `out`.
    pub fn build(&self, out: &mut Collector) -> Option<Built> {
        if self.schema() != SCHEMA {
            out.push("/schema", format!("unsupported schema {:?}, expected {SCHEMA:?}", self.schema()));
        }
        let built = match self {
            Document::SymmetricLoop { lp, steps, .. } => {
                if steps.is_some_and(|s| s < cr_orient::symplectic_path::MIN_STEPS) {
                    out.push("/steps", format!("steps must be at least {}", cr_orient::symplectic_path::MIN_STEPS));
                }
                lp.build("/loop", out).map(|lp| Built::SymmetricLoop { lp, steps: *steps })
            }
            Document::Field { field, .. } => field.build("/field", out).map(Built::Field),
            Document::Unitary { unitary, base, .. } => {
                let u = unitary.build("/unitary", out);
                let b = base.as_ref().map(|b| b.build("/base", out));
                match (u, b) {
                    (Some(unitary), None) => Some(Built::Unitary { unitary, base: None }),
                    (Some(unitary), Some(Some(b))) => Some(Built::Unitary { unitary, base: Some(b) }),
                    _ => None,
                }
            }
            Document::SoLoop { lp, .. } => lp.build("/loop", out).map(Built::SoLoop),
            Document::Complex {
                generators,
                edges,
                quadruples,
                ..
            } => build_complex(generators, edges, quadruples, out).map(Built::Complex),
            Document::SuiteConfig {
                reference,
                transport,
                transport_grid,
                random_complexes,
                homotopy_trials,
                ..
            } => {
                let spec = SuiteConfigSpec {
                    reference: *reference,
                    transport: *transport,
                    transport_grid: *transport_grid,
                    random_complexes: *random_complexes,
                    homotopy_trials: *homotopy_trials,
                };
                crate::suite::SuiteConfig::from_spec(&spec, out).map(Built::SuiteConfig)
            }
        };
        if out.is_empty() {
            built
        } else {
            None
        }
    }
}

/// Reads, parses and checks a document. IO problems and schema problems are
/// reported as different error kinds.
pub fn load(path: &Path) -> Result<(Document, Built), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<(Document, Built), CliError> {
    let map = SourceMap::new(text);
    let doc: Document = match serde_json::from_str(text) {
        Ok(d) => d,
        Err(e) => {
            return Err(CliError::Schema(vec![crate::diagnostics::Diagnostic {
                pointer: String::new(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }]))
        }
    };
    let mut out = Collector::default();
    match doc.build(&mut out) {
        Some(built) if out.is_empty() => Ok((doc, built)),
        _ => Err(CliError::Schema(out.locate(&map))),
    }
}
