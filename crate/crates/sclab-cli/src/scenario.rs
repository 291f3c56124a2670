//! Scenario files: JSON with a `spec_version`, a `kind` and kind-specific
//! fields. Loading is two-pass: the common header is read from a generic
//! value, then the remainder is decoded strictly into the kind's body.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use sclab::jets::Expr;

use crate::error::CliError;
use crate::expr;

pub const SPEC_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    ConnectionCheck,
    Reduce,
    Induce,
    Roundtrip,
    Twistor,
    Wkb,
    Koszul,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::ConnectionCheck => "connection-check",
            Kind::Reduce => "reduce",
            Kind::Induce => "induce",
            Kind::Roundtrip => "roundtrip",
            Kind::Twistor => "twistor",
            Kind::Wkb => "wkb",
            Kind::Koszul => "koszul",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FormSpec {
    Standard,
    Constant { matrix: Vec<Vec<f64>> },
    /// `ω_ij` for `i < j`, row by row.
    Upper { entries: Vec<String> },
    /// `ω = dλ`.
    Exact { potential: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConnSpec {
    Flat,
    /// `Γ^k_ij` at `(k·d + i)·d + j`.
    Christoffel { symbols: Vec<String> },
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionCheck {
    pub dimension: usize,
    pub form: FormSpec,
    pub connection: ConnSpec,
    #[serde(default = "yes")]
    pub symplectize: bool,
    /// Totally symmetric perturbation, `d³` entries.
    #[serde(default)]
    pub perturbation: Option<Vec<String>>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Sample points are drawn from `[-box, box]^d`.
    #[serde(default = "default_box", rename = "box")]
    pub sample_box: f64,
    #[serde(default)]
    pub expect_ricci_type: Option<bool>,
}

fn default_points() -> usize {
    100
}

fn default_box() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ASpec {
    J0,
    Matrix { entries: Vec<Vec<f64>> },
    /// `A = J₀S` for a symmetric `S`.
    Symmetric { entries: Vec<Vec<f64>> },
    /// Drawn from the scenario seed.
    Random { scale: f64 },
}

fn default_radius() -> f64 {
    0.3
}

fn default_cert_points() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reduce {
    /// Ambient dimension `N = 2n + 2`.
    pub size: usize,
    pub a: ASpec,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_cert_points")]
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaseSpec {
    /// `(ℝ^d, dλ)` with a connection made symplectic and optionally perturbed.
    Chart {
        potential: Vec<String>,
        connection: ConnSpec,
        #[serde(default)]
        perturbation: Option<Vec<String>>,
    },
    /// The Ricci-type chart of a reduction.
    Reduction {
        size: usize,
        a: ASpec,
        #[serde(default)]
        x0: Option<Vec<f64>>,
        #[serde(default = "default_radius")]
        radius: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecChoice {
    RicciFlat,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InduceExpect {
    /// Ricci-flat with non-vanishing curvature.
    RicciFlat,
    Flat,
}

fn ricci_flat() -> SpecChoice {
    SpecChoice::RicciFlat
}

fn default_induce_points() -> usize {
    10
}

fn default_roundtrip_points() -> usize {
    50
}

fn default_base_box() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Induce {
    pub base: BaseSpec,
    #[serde(default = "ricci_flat")]
    pub spec: SpecChoice,
    #[serde(default = "default_induce_points")]
    pub points: usize,
    #[serde(default = "default_base_box", rename = "box")]
    pub sample_box: f64,
    /// Defaults to `flat` for a reduction base and `ricci-flat` otherwise.
    #[serde(default)]
    pub expect: Option<InduceExpect>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roundtrip {
    pub base: BaseSpec,
    #[serde(default = "ricci_flat")]
    pub spec: SpecChoice,
    #[serde(default = "default_roundtrip_points")]
    pub points: usize,
    #[serde(default = "default_base_box", rename = "box")]
    pub sample_box: f64,
}

fn default_j() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Twistor {
    pub base: BaseSpec,
    #[serde(default = "default_j")]
    pub j_samples: usize,
    #[serde(default = "default_induce_points")]
    pub points: usize,
    #[serde(default = "default_base_box", rename = "box")]
    pub sample_box: f64,
    /// Add a random `W`-type tensor of this norm and expect a defect.
    #[serde(default)]
    pub inject_w: Option<f64>,
    /// Sample count for the uniqueness-rank certificate.
    #[serde(default)]
    pub uniqueness_samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelSpec {
    Curved,
    Flat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AmpSpec {
    A0,
    StronglyClosed,
    JacSqrt,
    /// P-family with `P` an expression in `x1`.
    P { p: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub a0: f64,
    pub l0: f64,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPair {
    pub u: GaussianSpec,
    pub v: GaussianSpec,
    pub x: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WkbCheck {
    Kernel,
    Expansion,
    Cocycle,
}

fn default_samples() -> usize {
    1000
}

fn default_thetas() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}

fn default_nodes() -> [usize; 2] {
    [64, 64]
}

fn default_kappa() -> f64 {
    1.0
}

fn all_wkb_checks() -> Vec<WkbCheck> {
    vec![WkbCheck::Kernel, WkbCheck::Expansion, WkbCheck::Cocycle]
}

fn strongly_closed() -> AmpSpec {
    AmpSpec::StronglyClosed
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wkb {
    #[serde(default = "all_wkb_checks")]
    pub checks: Vec<WkbCheck>,
    /// Amplitude compared against `√Jac_Φ` and used in the expansion.
    #[serde(default = "strongly_closed")]
    pub amplitude: AmpSpec,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    #[serde(default)]
    pub pairs: Vec<GaussianPair>,
    #[serde(default = "default_nodes")]
    pub nodes: [usize; 2],
    /// Multiplier on the first-order term `(θ/2i){u,v}`.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub model: Option<ModelSpec>,
}

fn default_dims() -> Vec<usize> {
    vec![2, 4]
}

fn default_degree() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Koszul {
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_degree")]
    pub max_degree: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    ConnectionCheck(ConnectionCheck),
    Reduce(Reduce),
    Induce(Induce),
    Roundtrip(Roundtrip),
    Twistor(Twistor),
    Wkb(Wkb),
    Koszul(Koszul),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub seed: u64,
    /// Replaces the default tolerance of every upper-bound check.
    pub tol: Option<f64>,
    pub body: Body,
}

impl Scenario {
    pub fn kind(&self) -> Kind {
        match &self.body {
            Body::ConnectionCheck(_) => Kind::ConnectionCheck,
            Body::Reduce(_) => Kind::Reduce,
            Body::Induce(_) => Kind::Induce,
            Body::Roundtrip(_) => Kind::Roundtrip,
            Body::Twistor(_) => Kind::Twistor,
            Body::Wkb(_) => Kind::Wkb,
            Body::Koszul(_) => Kind::Koszul,
        }
    }

    /// The scenario as a JSON value, header fields first.
    pub fn to_value(&self) -> Value {
        let body = match &self.body {
            Body::ConnectionCheck(b) => serde_json::to_value(b),
            Body::Reduce(b) => serde_json::to_value(b),
            Body::Induce(b) => serde_json::to_value(b),
            Body::Roundtrip(b) => serde_json::to_value(b),
            Body::Twistor(b) => serde_json::to_value(b),
            Body::Wkb(b) => serde_json::to_value(b),
            Body::Koszul(b) => serde_json::to_value(b),
        }
        .expect("scenario bodies serialize");
        let mut m = Map::new();
        m.insert("spec_version".into(), Value::from(SPEC_VERSION));
        m.insert("kind".into(), Value::from(self.kind().as_str()));
        if let Some(n) = &self.name {
            m.insert("name".into(), Value::from(n.clone()));
        }
        m.insert("seed".into(), Value::from(self.seed));
        if let Some(t) = self.tol {
            m.insert("tol".into(), Value::from(t));
        }
        if let Value::Object(b) = body {
            m.extend(b);
        }
        Value::Object(m)
    }
}

fn schema(path: impl Into<String>, msg: impl Into<String>) -> CliError {
    CliError::Schema { path: path.into(), msg: msg.into() }
}

fn decode<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })
}

/// Parse scenario text. Syntax errors carry line and column; schema errors
/// carry the field path.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Parse { line: e.line(), column: e.column(), msg: e.to_string() })?;
    let Value::Object(mut map) = value else {
        return Err(schema("", "a scenario must be a JSON object"));
    };
    match map.remove("spec_version") {
        Some(Value::String(s)) if s == SPEC_VERSION => {}
        Some(v) => return Err(schema("spec_version", format!("unsupported version {v}, expected \"{SPEC_VERSION}\""))),
        None => return Err(schema("spec_version", "missing field")),
    }
    let kind: Kind = match map.remove("kind") {
        Some(v) => decode(v).map_err(|_| schema("kind", "unknown kind"))?,
        None => return Err(schema("kind", "missing field")),
    };
    let name = match map.remove("name") {
        None => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err(schema("name", "expected a string")),
    };
    let seed = match map.remove("seed") {
        None => 0,
        Some(v) => v.as_u64().ok_or_else(|| schema("seed", "expected a non-negative integer"))?,
    };
    let tol = match map.remove("tol") {
        None => None,
        Some(v) => Some(v.as_f64().filter(|t| *t > 0.0).ok_or_else(|| schema("tol", "expected a positive number"))?),
    };
    let rest = Value::Object(map);
    let body = match kind {
        Kind::ConnectionCheck => Body::ConnectionCheck(decode(rest)?),
        Kind::Reduce => Body::Reduce(decode(rest)?),
        Kind::Induce => Body::Induce(decode(rest)?),
        Kind::Roundtrip => Body::Roundtrip(decode(rest)?),
        Kind::Twistor => Body::Twistor(decode(rest)?),
        Kind::Wkb => Body::Wkb(decode(rest)?),
        Kind::Koszul => Body::Koszul(decode(rest)?),
    };
    let sc = Scenario { name, seed, tol, body };
    validate(&sc)?;
    Ok(sc)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    parse_scenario(&text)
}

pub fn save_scenario(sc: &Scenario, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&sc.to_value()).expect("values serialize") + "\n";
    std::fs::write(path, text).map_err(|e| CliError::Io { path: path.display().to_string(), msg: e.to_string() })
}

pub fn compile(path: &str, src: &str, dim: usize) -> Result<Expr, CliError> {
    expr::parse(src, dim).map_err(|e| schema(path, e.to_string()))
}

pub fn compile_all(path: &str, srcs: &[String], dim: usize, len: usize) -> Result<Vec<Expr>, CliError> {
    if srcs.len() != len {
        return Err(CliError::Dimension(format!("{path}: expected {len} entries, got {}", srcs.len())));
    }
    srcs.iter().enumerate().map(|(i, s)| compile(&format!("{path}[{i}]"), s, dim)).collect()
}

fn check_matrix(path: &str, m: &[Vec<f64>], n: usize) -> Result<(), CliError> {
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(CliError::Dimension(format!("{path}: expected a {n}×{n} matrix")));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(schema(path, "non-finite entry"));
    }
    Ok(())
}

fn check_even(path: &str, d: usize, max: usize) -> Result<(), CliError> {
    if d == 0 || d % 2 != 0 || d > max {
        return Err(CliError::Dimension(format!("{path}: dimension {d} must be even and at most {max}")));
    }
    Ok(())
}

fn validate_form(f: &FormSpec, d: usize) -> Result<(), CliError> {
    match f {
        FormSpec::Standard => Ok(()),
        FormSpec::Constant { matrix } => check_matrix("form.matrix", matrix, d),
        FormSpec::Upper { entries } => compile_all("form.entries", entries, d, d * (d - 1) / 2).map(drop),
        FormSpec::Exact { potential } => compile_all("form.potential", potential, d, d).map(drop),
    }
}

fn validate_conn(path: &str, c: &ConnSpec, d: usize) -> Result<(), CliError> {
    match c {
        ConnSpec::Flat => Ok(()),
        ConnSpec::Christoffel { symbols } => compile_all(&format!("{path}.symbols"), symbols, d, d * d * d).map(drop),
    }
}

fn validate_a(path: &str, a: &ASpec, size: usize, x0: &Option<Vec<f64>>, radius: f64) -> Result<(), CliError> {
    check_even(&format!("{path}.size"), size, 8)?;
    if size < 4 {
        return Err(CliError::Dimension(format!("{path}.size: the ambient space needs N >= 4")));
    }
    match a {
        ASpec::J0 => {}
        ASpec::Matrix { entries } | ASpec::Symmetric { entries } => check_matrix(&format!("{path}.a.entries"), entries, size)?,
        ASpec::Random { scale } => {
            if !(*scale > 0.0 && scale.is_finite()) {
                return Err(schema(format!("{path}.a.scale"), "expected a positive number"));
            }
        }
    }
    if let Some(x) = x0 {
        if x.len() != size {
            return Err(CliError::Dimension(format!("{path}.x0: expected {size} entries")));
        }
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(schema(format!("{path}.radius"), "expected a positive number"));
    }
    // sp-membership is part of the schema
    crate::run::build_a(a, size, 0).map(drop).map_err(|e| match e {
        CliError::Module { source, .. } => schema(format!("{path}.a"), source.to_string()),
        other => other,
    })
}

fn validate_base(b: &BaseSpec) -> Result<(), CliError> {
    match b {
        BaseSpec::Chart { potential, connection, perturbation } => {
            let d = potential.len();
            check_even("base.potential", d, 6)?;
            compile_all("base.potential", potential, d, d)?;
            validate_conn("base.connection", connection, d)?;
            if let Some(p) = perturbation {
                compile_all("base.perturbation", p, d, d * d * d)?;
            }
            Ok(())
        }
        BaseSpec::Reduction { size, a, x0, radius } => validate_a("base", a, *size, x0, *radius),
    }
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(schema(path, "expected a positive number"))
    }
}

fn nonzero(path: &str, n: usize) -> Result<(), CliError> {
    if n == 0 {
        Err(schema(path, "expected at least one"))
    } else {
        Ok(())
    }
}

fn validate(sc: &Scenario) -> Result<(), CliError> {
    match &sc.body {
        Body::ConnectionCheck(c) => {
            check_even("dimension", c.dimension, 6)?;
            validate_form(&c.form, c.dimension)?;
            validate_conn("connection", &c.connection, c.dimension)?;
            if let Some(p) = &c.perturbation {
                compile_all("perturbation", p, c.dimension, c.dimension.pow(3))?;
            }
            nonzero("points", c.points)?;
            positive("box", c.sample_box)
        }
        Body::Reduce(r) => {
            validate_a("", &r.a, r.size, &r.x0, r.radius)?;
            nonzero("points", r.points)
        }
        Body::Induce(i) => {
            validate_base(&i.base)?;
            nonzero("points", i.points)?;
            positive("box", i.sample_box)
        }
        Body::Roundtrip(r) => {
            validate_base(&r.base)?;
            nonzero("points", r.points)?;
            positive("box", r.sample_box)
        }
        Body::Twistor(t) => {
            validate_base(&t.base)?;
            nonzero("j_samples", t.j_samples)?;
            nonzero("points", t.points)?;
            positive("box", t.sample_box)?;
            if let Some(w) = t.inject_w {
                positive("inject_w", w)?;
            }
            Ok(())
        }
        Body::Wkb(w) => {
            if let AmpSpec::P { p } = &w.amplitude {
                compile("amplitude.p", p, 1)?;
            }
            if w.checks.contains(&WkbCheck::Expansion) {
                if w.thetas.len() < 2 {
                    return Err(schema("thetas", "a slope needs at least two values"));
                }
                for (i, t) in w.thetas.iter().enumerate() {
                    positive(&format!("thetas[{i}]"), *t)?;
                }
                if w.pairs.is_empty() {
                    return Err(schema("pairs", "the expansion check needs at least one Gaussian pair"));
                }
            }
            for (i, p) in w.pairs.iter().enumerate() {
                for (n, g) in [("u", p.u), ("v", p.v)] {
                    positive(&format!("pairs[{i}].{n}.w"), g.w)?;
                }
            }
            if w.nodes.iter().any(|n| *n < 2 || *n > 1024) {
                return Err(schema("nodes", "node counts must lie in 2..=1024"));
            }
            nonzero("samples", w.samples)
        }
        Body::Koszul(k) => {
            for (i, d) in k.dims.iter().enumerate() {
                if *d == 0 || *d > 6 {
                    return Err(CliError::Dimension(format!("dims[{i}]: {d} outside 1..=6")));
                }
            }
            if k.max_degree > 4 {
                return Err(schema("max_degree", "at most 4"));
            }
            Ok(())
        }
    }
}
