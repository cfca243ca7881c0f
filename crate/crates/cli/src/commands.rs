//! Subcommand implementations. Each returns a JSON document and a text
//! rendering; `main` decides where they go.

use std::fmt::Write as _;
use std::path::Path;

use cr_orient::cr_operator::{fredholm_index_estimate, numerical_kernel, Discretization, DiscretizedOperator, TolPolicy};
use cr_orient::orientation::DEFAULT_TRANSPORT_STEPS;
use cr_orient::symplectic_path::endpoint_determinant;
use cr_orient::twisted_complex::{find_coboundary, MAX_BRUTE_FORCE};
use cr_orient::{
    boundary_matrices, conjugation_sign, conley_zehnder_index, homology, integrate_symplectic_path, lifts_to_spin,
    predict_sign, spin_lift::delta_sign, transport_orientation, winding_number, Domain, OperatorPath, SharedField,
    SymmetricLoop,
};
use serde_json::{json, Value};

use crate::schema::{self, Built, Document};
use crate::suite::{run_suite, SuiteConfig, SuiteName};
use crate::{CliError, SCHEMA};

pub const DEFAULT_CZ_STEPS: usize = 256;

pub struct Output {
    pub json: Value,
    pub text: String,
    pub exit_code: i32,
}

impl Output {
    fn ok(command: &str, body: Value, text: String) -> Self {
        let mut json = json!({ "schema": SCHEMA, "command": command });
        if let (Value::Object(m), Value::Object(b)) = (&mut json, body) {
            m.extend(b);
        }
        Self { json, text, exit_code: 0 }
    }
}

fn wrong_type(path: &Path, doc: &Document, expected: &str) -> CliError {
    CliError::Config(format!(
        "{} is a {:?} document, expected {expected}",
        path.display(),
        doc.type_name()
    ))
}

fn cz_of(lp: &SymmetricLoop, steps: usize) -> Result<(i64, f64), CliError> {
    let path = integrate_symplectic_path(lp, steps)?;
    let det = endpoint_determinant(&path);
    Ok((conley_zehnder_index(&path)?.value, det))
}

pub fn cz(path: &Path) -> Result<Output, CliError> {
    let (doc, built) = schema::load(path)?;
    let Built::SymmetricLoop { lp, steps } = built else {
        return Err(wrong_type(path, &doc, "symmetric_loop"));
    };
    let steps = steps.unwrap_or(DEFAULT_CZ_STEPS);
    let (value, det) = cz_of(&lp, steps)?;
    Ok(Output::ok(
        "cz",
        json!({ "n": lp.n(), "steps": steps, "endpoint_determinant": det, "cz": value }),
        format!("CZ index {value} (n = {}, {steps} steps, normalized det(g(1) - I) = {det:.3e})\n", lp.n()),
    ))
}

fn load_field(path: &Path) -> Result<SharedField, CliError> {
    let (doc, built) = schema::load(path)?;
    match built {
        Built::Field(f) => Ok(f),
        _ => Err(wrong_type(path, &doc, "field")),
    }
}

pub fn kernel(path: &Path, disc: Discretization) -> Result<Output, CliError> {
    let field = load_field(path)?;
    let op = DiscretizedOperator::assemble_for(&*field, &disc)?;
    let k = numerical_kernel(&op, &TolPolicy::default())?;
    Ok(Output::ok(
        "kernel",
        json!({
            "resolution": disc, "dimension": k.dim(), "gap": k.gap,
            "smallest_singular_values": k.singular_values,
        }),
        format!("kernel dimension {} (gap {:.3e}) at K = {}, L = {}, Ns = {}\n", k.dim(), k.gap, disc.k, disc.l, disc.ns),
    ))
}

pub fn index(path: &Path, disc: Discretization) -> Result<Output, CliError> {
    let field = load_field(path)?;
    let op = DiscretizedOperator::assemble_for(&*field, &disc)?;
    let est = fredholm_index_estimate(&op, &TolPolicy::default())?;
    let (plus, _) = cz_of(&field.plus_loop(), DEFAULT_CZ_STEPS)?;
    let predicted = match (field.domain(), field.minus_loop()) {
        (Domain::Full, Some(minus)) => cz_of(&minus, DEFAULT_CZ_STEPS)?.0 - plus,
        _ => -plus,
    };
    let agrees = predicted == est.index;
    let mut out = Output::ok(
        "index",
        json!({
            "resolution": disc, "kernel": est.kernel, "cokernel": est.cokernel,
            "index": est.index, "predicted": predicted, "agrees": agrees,
        }),
        format!(
            "index {} (kernel {}, cokernel {}); from CZ indices {predicted}\n",
            est.index, est.kernel, est.cokernel
        ),
    );
    if !agrees {
        out.exit_code = 1;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OrientMode {
    /// Transport a kernel frame along the conjugation path only.
    Transport,
    /// Compare the transported frame with the pushed-forward one.
    Conjugation,
}

pub fn orient(path: &Path, mode: OrientMode, disc: Discretization, steps: Option<usize>) -> Result<Output, CliError> {
    let (doc, built) = schema::load(path)?;
    let Built::Unitary { unitary, base } = built else {
        return Err(wrong_type(path, &doc, "unitary"));
    };
    let base = base.unwrap_or_else(|| cr_orient::analytic_oracles::minus_pi_field(unitary.n()));
    let steps = steps.unwrap_or(DEFAULT_TRANSPORT_STEPS);
    let policy = TolPolicy::default();
    let predicted = predict_sign(&*unitary)?;
    match mode {
        OrientMode::Conjugation => {
            let rep = conjugation_sign(&unitary, &base, &disc, steps, &policy)?;
            let text = format!(
                "conjugation by {}: sign {:+} (alignment {:.6}, kernel dimension {}); predicted {:+}\n",
                unitary.label(),
                rep.sign,
                rep.alignment,
                rep.kernel_dim,
                predicted
            );
            let mut out = Output::ok(
                "orient conjugation",
                json!({
                    "gauge": unitary.label(), "resolution": disc, "grid": steps,
                    "sign": rep.sign, "predicted": predicted, "alignment": rep.alignment,
                    "kernel_dim": rep.kernel_dim, "transport": rep.transport,
                }),
                text,
            );
            if rep.sign != predicted {
                out.exit_code = 1;
            }
            Ok(out)
        }
        OrientMode::Transport => {
            let reach = unitary.support_end();
            let family = |rho: f64| -> cr_orient::Result<SharedField> {
                let shifted: cr_orient::SharedUnitary = std::sync::Arc::new(cr_orient::unitary::Shifted {
                    inner: unitary.clone(),
                    shift: rho * reach,
                });
                Ok(std::sync::Arc::new(cr_orient::field::ConjugatedField::new(shifted, base.clone())?))
            };
            let op_path = OperatorPath::from_family(1.0, 0.0, steps, disc, family)?;
            let tr = transport_orientation(&op_path, &policy, None)?;
            let min_det = tr.sign.step_determinants.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
            Ok(Output::ok(
                "orient transport",
                json!({
                    "gauge": unitary.label(), "resolution": disc, "grid": steps,
                    "kernel_dim": tr.kernels[0].dim(), "transport": tr.sign,
                }),
                format!(
                    "transport along the conjugation path of {}: relative sign {:+}, smallest step determinant {min_det:.4}\n",
                    unitary.label(),
                    tr.sign.value
                ),
            ))
        }
    }
}

pub fn spin(path: &Path) -> Result<Output, CliError> {
    let (doc, built) = schema::load(path)?;
    let Built::SoLoop(lp) = built else {
        return Err(wrong_type(path, &doc, "so_loop"));
    };
    let lift = lifts_to_spin(&lp)?;
    let winding = if lp.n() == 2 { Some(winding_number(&lp)?) } else { None };
    let delta = delta_sign(&lp)?;
    let mut text = format!("loop in SO({}): ", lp.n());
    if let Some(w) = winding {
        let _ = write!(text, "winding {w}, ");
    }
    let _ = writeln!(text, "{} to Spin, delta {delta:+}", if lift.lifts { "lifts" } else { "does not lift" });
    Ok(Output::ok(
        "spin",
        json!({ "n": lp.n(), "samples": lp.samples().len(), "winding": winding, "lifts": lift.lifts, "delta": delta }),
        text,
    ))
}

pub fn complex(path: &Path) -> Result<Output, CliError> {
    let (doc, built) = schema::load(path)?;
    let Built::Complex(c) = built else {
        return Err(wrong_type(path, &doc, "complex"));
    };
    let (std_h, tw_h) = (homology(&c, false)?, homology(&c, true)?);
    let coboundary = if c.generators().len() <= MAX_BRUTE_FORCE {
        find_coboundary(&c)?
    } else {
        None
    };
    let equal = std_h == tw_h;
    let boundaries = |twisted: bool| -> Value {
        boundary_matrices(&c, twisted)
            .maps
            .iter()
            .map(|(k, m)| (k.to_string(), serde_json::to_value(m).expect("matrix serializes")))
            .collect::<serde_json::Map<_, _>>()
            .into()
    };
    let mut text = String::new();
    for (label, h) in [("standard", &std_h), ("twisted", &tw_h)] {
        let _ = write!(text, "H({label}):");
        for g in &h.groups {
            let _ = write!(text, " H_{} = {}", g.degree, group_text(g.free_rank, &g.torsion));
        }
        text.push('\n');
    }
    let _ = writeln!(
        text,
        "delta is {}a coboundary; homologies {}",
        if coboundary.is_some() { "" } else { "not " },
        if equal { "agree" } else { "differ" }
    );
    Ok(Output::ok(
        "complex",
        json!({
            "boundary": boundaries(false), "twisted_boundary": boundaries(true),
            "homology": std_h, "twisted_homology": tw_h,
            "coboundary": coboundary, "equal_homology": equal,
        }),
        text,
    ))
}

fn group_text(free: usize, torsion: &[impl std::fmt::Display]) -> String {
    let mut parts: Vec<String> = Vec::new();
    if free > 0 {
        parts.push(if free == 1 { "Z".into() } else { format!("Z^{free}") });
    }
    parts.extend(torsion.iter().map(|t| format!("Z/{t}")));
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

pub fn validate(path: &Path) -> Result<Output, CliError> {
    let (doc, _) = schema::load(path)?;
    Ok(Output::ok(
        "validate",
        json!({ "valid": true, "type": doc.type_name() }),
        format!("{}: valid {} document\n", path.display(), doc.type_name()),
    ))
}

pub fn suite(
    name: SuiteName,
    config: Option<&Path>,
    resolution: Option<Discretization>,
    seed: u64,
    timings: bool,
) -> Result<Output, CliError> {
    let mut cfg = match config {
        Some(path) => {
            let (doc, built) = schema::load(path)?;
            match built {
                Built::SuiteConfig(c) => c,
                _ => return Err(wrong_type(path, &doc, "suite_config")),
            }
        }
        None => SuiteConfig::default(),
    };
    if let Some(d) = resolution {
        cfg = cfg.with_resolution(d)?;
    }
    let report = run_suite(name, &cfg, seed, timings);
    Ok(Output {
        json: serde_json::to_value(&report).expect("report serializes"),
        text: report.to_text(),
        exit_code: report.exit_code(),
    })
}
