//! Problem files, command dispatch and report streams.
//!
//! A problem file is a JSON object with optional `parameters`, `variables`,
//! `connection`, `pushforward` and `numeric` blocks. Forms are term lists
//! `[{"coeff": "<expr>", "gens": ["da1", ...]}]`; a plain expression string is
//! accepted wherever a 0-form is. Matrices are row-major nested arrays.
//! Validation reports every problem found, not just the first one.

use std::sync::Arc;
use std::time::Instant;

use serde_json::{json, Map, Value};

use crate::chern_simons::{gauge_delta, transgress, transgression_defect};
use crate::error::{Error, Result};
use crate::exterior::{Form, GenUniverse};
use crate::logconn::{all_words, universe, word_to_string, LogConnectionP1, Point, FIBER};
use crate::matform::MatForm;
use crate::numeric::{verify_root_sums, verify_rr_numeric, NumericConfig};
use crate::par::par_map;
use crate::pushforward::{pushforward_checks, FiniteAlgebra};
use crate::random::{self, Family, Shape};
use crate::ratfun::expr::is_identifier as expr_ok;
use crate::ratfun::{RatFun, VarKind, VarUniverse, Variable};
use crate::report::{form_to_json, Status, VerificationReport};
use crate::rr::{check_dlog_wedge, connection_params, nonempty_subsets, verify_rr_symbolic};

#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub connection: Option<LogConnectionP1>,
    pub pushforward: Option<FiniteAlgebra>,
    pub numeric: NumericConfig,
    /// Whether a `numeric` block was present; command-line flags override defaults only.
    pub has_numeric: bool,
}

/// Collects schema violations with their JSON paths.
#[derive(Default)]
struct Issues(Vec<String>);

impl Issues {
    fn push(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.0.push(format!("{path}: {msg}"));
    }
}

pub fn matrix_to_json(m: &MatForm) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array((0..m.cols()).map(|j| form_to_json(m.get(i, j))).collect()))
            .collect(),
    )
}

/// Inverse of [`form_to_json`]; also accepts a bare expression string as a 0-form.
pub fn form_from_json(u: &Arc<GenUniverse>, v: &Value) -> Result<Form> {
    match v {
        Value::String(s) => Ok(Form::scalar(u, RatFun::parse(u.vars(), s)?)),
        Value::Number(n) => Ok(Form::scalar(u, RatFun::parse(u.vars(), &n.to_string())?)),
        Value::Array(terms) => {
            let mut out = Form::zero(u);
            for (k, t) in terms.iter().enumerate() {
                let obj = t.as_object().ok_or_else(|| shape(format!("term {k} is not an object")))?;
                if let Some(extra) = obj.keys().find(|key| *key != "coeff" && *key != "gens") {
                    return Err(shape(format!("term {k} has unknown key `{extra}`")));
                }
                let coeff = match obj.get("coeff") {
                    Some(Value::String(s)) => s.clone(),
                    Some(Value::Number(n)) => n.to_string(),
                    _ => return Err(shape(format!("term {k} needs a string `coeff`"))),
                };
                let gens: Vec<String> = match obj.get("gens") {
                    None => Vec::new(),
                    Some(Value::Array(g)) => g
                        .iter()
                        .map(|x| x.as_str().map(str::to_string).ok_or_else(|| shape(format!("term {k}: generator names must be strings"))))
                        .collect::<Result<_>>()?,
                    Some(_) => return Err(shape(format!("term {k}: `gens` must be an array"))),
                };
                if (1..gens.len()).any(|i| gens[..i].contains(&gens[i])) {
                    return Err(shape(format!("term {k} repeats a generator")));
                }
                out.add_assign(&Form::from_named_terms(u, &[(coeff, gens)])?);
            }
            Ok(out)
        }
        _ => Err(shape("a form is a term list or an expression string".into())),
    }
}

pub fn matrix_from_json(u: &Arc<GenUniverse>, v: &Value) -> Result<MatForm> {
    let rows = v.as_array().ok_or_else(|| shape("a matrix is an array of rows".into()))?;
    if rows.is_empty() {
        return Err(shape("empty matrix".into()));
    }
    let mut cells = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_array().ok_or_else(|| shape(format!("row {} is not an array", i + 1)))?;
        cells.push(r);
    }
    let cols = cells[0].len();
    if cols == 0 || cells.iter().any(|r| r.len() != cols) {
        return Err(shape("rows have unequal or zero length".into()));
    }
    let mut out = MatForm::zero(u, rows.len(), cols);
    for (i, r) in cells.iter().enumerate() {
        for (j, e) in r.iter().enumerate() {
            let f = form_from_json(u, e).map_err(|err| shape(format!("entry ({}, {}): {err}", i + 1, j + 1)))?;
            out.set(i, j, f);
        }
    }
    Ok(out)
}

fn shape(msg: String) -> Error {
    Error::Shape(msg)
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], path: &str, issues: &mut Issues) {
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            issues.push(path, format!("unknown key `{k}`"));
        }
    }
}

fn string_list(v: Option<&Value>, path: &str, issues: &mut Issues) -> Vec<String> {
    match v {
        None => Vec::new(),
        Some(Value::Array(a)) => a
            .iter()
            .enumerate()
            .filter_map(|(i, x)| match x.as_str() {
                Some(s) if expr_ok(s) => Some(s.to_string()),
                Some(s) => {
                    issues.push(&format!("{path}[{i}]"), format!("`{s}` is not an identifier"));
                    None
                }
                None => {
                    issues.push(&format!("{path}[{i}]"), "expected a string");
                    None
                }
            })
            .collect(),
        Some(_) => {
            issues.push(path, "expected an array of names");
            Vec::new()
        }
    }
}

fn duplicates(names: &[String], path: &str, issues: &mut Issues) {
    for (i, n) in names.iter().enumerate() {
        if let Some(j) = names[..i].iter().position(|m| m == n) {
            issues.push(path, format!("duplicate name `{n}` (entries {} and {})", j + 1, i + 1));
        }
    }
}

/// Rows and columns of a rectangular nested array.
fn json_shape(v: &Value) -> Option<(usize, usize)> {
    let rows = v.as_array()?;
    let cols = rows.first()?.as_array()?.len();
    rows.iter().all(|r| r.as_array().is_some_and(|r| r.len() == cols)).then_some((rows.len(), cols))
}

pub fn parse_problem(text: &str) -> Result<ProblemFile> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut issues = Issues::default();
    let Some(top) = doc.as_object() else {
        return Err(Error::Schema(vec!["$: the problem must be a JSON object".into()]));
    };
    check_keys(top, &["parameters", "variables", "connection", "pushforward", "numeric"], "$", &mut issues);

    let mut params = string_list(top.get("parameters"), "$.parameters", &mut issues);
    let declared = top.get("variables").map(|v| string_list(Some(v), "$.variables", &mut issues));
    duplicates(&params, "$.parameters", &mut issues);

    let connection = match top.get("connection") {
        None => None,
        Some(c) => parse_connection(c, &mut params, declared.as_deref(), &mut issues),
    };
    let pushforward = top.get("pushforward").and_then(|p| parse_pushforward(p, &mut issues));
    let (numeric, has_numeric) = match top.get("numeric") {
        None => (NumericConfig::default(), false),
        Some(n) => (parse_numeric(n, &mut issues), true),
    };
    if !issues.0.is_empty() {
        return Err(Error::Schema(issues.0));
    }
    Ok(ProblemFile { connection, pushforward, numeric, has_numeric })
}

fn parse_connection(
    v: &Value,
    params: &mut Vec<String>,
    declared: Option<&[String]>,
    issues: &mut Issues,
) -> Option<LogConnectionP1> {
    let path = "$.connection";
    let Some(obj) = v.as_object() else {
        issues.push(path, "expected an object");
        return None;
    };
    check_keys(obj, &["N", "delta", "points", "residues", "phi", "parameters"], path, issues);
    if obj.contains_key("parameters") {
        let local = string_list(obj.get("parameters"), "$.connection.parameters", issues);
        if params.is_empty() {
            duplicates(&local, "$.connection.parameters", issues);
            *params = local;
        } else if *params != local {
            issues.push("$.connection.parameters", "differs from the top-level parameter list");
        }
    }
    let before = issues.0.len();

    let mut points = Vec::new();
    match obj.get("points") {
        Some(Value::Array(a)) if !a.is_empty() => {
            for (i, p) in a.iter().enumerate() {
                let pp = format!("{path}.points[{i}]");
                match p.as_object() {
                    Some(o) if o.len() == 1 && o.contains_key("symbol") => match o["symbol"].as_str() {
                        Some(s) if expr_ok(s) => points.push(Some(Point::Symbol(s.to_string()))),
                        _ => {
                            issues.push(&pp, "`symbol` must be an identifier");
                            points.push(None);
                        }
                    },
                    Some(o) if o.len() == 1 && o.contains_key("value") => {
                        let text = match &o["value"] {
                            Value::String(s) => s.clone(),
                            Value::Number(n) => n.to_string(),
                            _ => String::new(),
                        };
                        let empty = VarUniverse::new(Vec::new()).expect("empty universe");
                        match RatFun::parse(&empty, &text).ok().and_then(|f| f.constant_value()) {
                            Some(c) => points.push(Some(Point::Value(c))),
                            None => {
                                issues.push(&pp, "`value` must be a rational constant");
                                points.push(None);
                            }
                        }
                    }
                    _ => {
                        issues.push(&pp, "expected {\"symbol\": name} or {\"value\": rational}");
                        points.push(None);
                    }
                }
            }
        }
        Some(_) => issues.push(&format!("{path}.points"), "expected a nonempty array"),
        None => issues.push(path, "missing `points`"),
    }
    let symbols: Vec<String> = points
        .iter()
        .filter_map(|p| match p {
            Some(Point::Symbol(s)) => Some(s.clone()),
            _ => None,
        })
        .collect();
    let values: Vec<String> = points
        .iter()
        .filter_map(|p| match p {
            Some(Point::Value(c)) => Some(c.to_string()),
            _ => None,
        })
        .collect();
    duplicates(&symbols, &format!("{path}.points"), issues);
    duplicates(&values, &format!("{path}.points"), issues);
    for s in &symbols {
        if params.contains(s) {
            issues.push(&format!("{path}.points"), format!("`{s}` is both a point and a parameter"));
        }
        if s == FIBER {
            issues.push(&format!("{path}.points"), format!("`{FIBER}` is reserved for the fiber coordinate"));
        }
        if let Some(d) = declared {
            if !d.contains(s) {
                issues.push(&format!("{path}.points"), format!("`{s}` is not declared in `variables`"));
            }
        }
    }
    if params.iter().any(|p| p == FIBER) {
        issues.push("$.parameters", format!("`{FIBER}` is reserved for the fiber coordinate"));
    }
    if let Some(d) = obj.get("delta") {
        if d.as_u64() != Some(points.len() as u64) {
            issues.push(&format!("{path}.delta"), format!("does not match the {} listed points", points.len()));
        }
    }
    if issues.0.len() > before || points.iter().any(Option::is_none) {
        // no universe to parse entries against, but shapes can still be reported
        if let Some(Value::Array(a)) = obj.get("residues") {
            for (i, m) in a.iter().enumerate() {
                if let Some((r, c)) = json_shape(m) {
                    if r != c {
                        issues.push(&format!("{path}.residues[{i}]"), format!("not square ({r}x{c})"));
                    }
                }
            }
        }
        return None;
    }
    let points: Vec<Point> = points.into_iter().flatten().collect();
    let u = match universe(&points, params) {
        Ok(u) => u,
        Err(e) => {
            issues.push(path, e);
            return None;
        }
    };

    let mut rank = obj.get("N").and_then(Value::as_u64).map(|n| n as usize);
    if obj.contains_key("N") && rank.is_none_or(|n| n == 0) {
        issues.push(&format!("{path}.N"), "must be a positive integer");
        rank = None;
    }
    let mut residues = Vec::new();
    match obj.get("residues") {
        Some(Value::Array(a)) => {
            if a.len() != points.len() {
                issues.push(&format!("{path}.residues"), format!("{} matrices for {} points", a.len(), points.len()));
            }
            for (i, m) in a.iter().enumerate() {
                let rp = format!("{path}.residues[{i}]");
                match matrix_from_json(&u, m) {
                    Ok(m) => {
                        if !m.is_square() {
                            issues.push(&rp, format!("not square ({}x{})", m.rows(), m.cols()));
                        } else if let Some(n) = rank {
                            if m.rows() != n {
                                issues.push(&rp, format!("is {0}x{0}, expected {n}x{n}", m.rows()));
                            }
                        } else {
                            rank = Some(m.rows());
                        }
                        residues.push(m);
                    }
                    Err(e) => issues.push(&rp, e),
                }
            }
        }
        Some(_) => issues.push(&format!("{path}.residues"), "expected an array of matrices"),
        None => issues.push(path, "missing `residues`"),
    }
    let phi = match obj.get("phi") {
        None => rank.map(|n| MatForm::zero(&u, n, n)),
        Some(m) => match matrix_from_json(&u, m) {
            Ok(m) => {
                if !m.is_square() || rank.is_some_and(|n| n != m.rows()) {
                    issues.push(&format!("{path}.phi"), format!("has shape {}x{}, expected {n}x{n}", m.rows(), m.cols(), n = rank.unwrap_or(m.rows())));
                }
                Some(m)
            }
            Err(e) => {
                issues.push(&format!("{path}.phi"), e);
                None
            }
        },
    };
    if issues.0.len() > before {
        return None;
    }
    let phi = phi?;
    match LogConnectionP1::new(&u, points, residues, phi) {
        Ok(c) => Some(c),
        Err(e) => {
            issues.push(path, e);
            None
        }
    }
}

fn parse_pushforward(v: &Value, issues: &mut Issues) -> Option<FiniteAlgebra> {
    let path = "$.pushforward";
    let Some(obj) = v.as_object() else {
        issues.push(path, "expected an object");
        return None;
    };
    check_keys(obj, &["base", "variable", "phi", "N", "blocks", "roots"], path, issues);
    let before = issues.0.len();
    let base = string_list(obj.get("base"), "$.pushforward.base", issues);
    duplicates(&base, "$.pushforward.base", issues);
    let t = match obj.get("variable") {
        None => "t".to_string(),
        Some(Value::String(s)) if expr_ok(s) => s.clone(),
        Some(_) => {
            issues.push(&format!("{path}.variable"), "must be an identifier");
            return None;
        }
    };
    if base.contains(&t) {
        issues.push(&format!("{path}.base"), format!("`{t}` is the algebra variable"));
    }
    let rank = match obj.get("N") {
        None => 1,
        Some(n) => match n.as_u64() {
            Some(n) if n > 0 => n as usize,
            _ => {
                issues.push(&format!("{path}.N"), "must be a positive integer");
                1
            }
        },
    };
    if issues.0.len() > before {
        return None;
    }
    let mut vars: Vec<Variable> = base.iter().map(|b| Variable { name: b.clone(), kind: VarKind::Parameter }).collect();
    vars.push(Variable { name: t, kind: VarKind::Fiber });
    let u = match VarUniverse::new(vars).and_then(|v| GenUniverse::new(v, 0)) {
        Ok(u) => u,
        Err(e) => {
            issues.push(path, e);
            return None;
        }
    };
    let phi = match obj.get("phi") {
        Some(Value::String(s)) => match RatFun::parse(u.vars(), s) {
            Ok(f) => Some(f),
            Err(e) => {
                issues.push(&format!("{path}.phi"), e);
                None
            }
        },
        Some(_) => {
            issues.push(&format!("{path}.phi"), "expected an expression string");
            None
        }
        None => {
            issues.push(path, "missing `phi`");
            None
        }
    };
    let mut blocks = Vec::new();
    match obj.get("blocks") {
        None => {}
        Some(Value::Array(a)) => {
            for (l, m) in a.iter().enumerate() {
                match matrix_from_json(&u, m) {
                    Ok(m) => {
                        if m.rows() != rank || m.cols() != rank {
                            issues.push(&format!("{path}.blocks[{l}]"), format!("expected {rank}x{rank}"));
                        }
                        blocks.push(m);
                    }
                    Err(e) => issues.push(&format!("{path}.blocks[{l}]"), e),
                }
            }
        }
        Some(_) => issues.push(&format!("{path}.blocks"), "expected an array of matrices"),
    }
    let roots = match obj.get("roots") {
        None => None,
        Some(Value::Array(a)) => {
            let mut r = Vec::new();
            for (i, x) in a.iter().enumerate() {
                match x.as_str().map(|s| RatFun::parse(u.vars(), s)) {
                    Some(Ok(f)) => r.push(f),
                    Some(Err(e)) => issues.push(&format!("{path}.roots[{i}]"), e),
                    None => issues.push(&format!("{path}.roots[{i}]"), "expected an expression string"),
                }
            }
            Some(r)
        }
        Some(_) => {
            issues.push(&format!("{path}.roots"), "expected an array");
            None
        }
    };
    if issues.0.len() > before {
        return None;
    }
    match FiniteAlgebra::new(&u, &phi?, rank, blocks, roots) {
        Ok(fa) => Some(fa),
        Err(e) => {
            issues.push(path, e);
            None
        }
    }
}

fn parse_numeric(v: &Value, issues: &mut Issues) -> NumericConfig {
    let path = "$.numeric";
    let mut cfg = NumericConfig::default();
    let Some(obj) = v.as_object() else {
        issues.push(path, "expected an object");
        return cfg;
    };
    check_keys(obj, &["seed", "tol", "samples", "range"], path, issues);
    if let Some(x) = obj.get("seed") {
        match x.as_u64() {
            Some(s) => cfg.seed = s,
            None => issues.push(&format!("{path}.seed"), "must be a nonnegative integer"),
        }
    }
    if let Some(x) = obj.get("tol") {
        match x.as_f64() {
            Some(t) if t > 0.0 => cfg.tol = t,
            _ => issues.push(&format!("{path}.tol"), "must be a positive number"),
        }
    }
    if let Some(x) = obj.get("samples") {
        match x.as_u64() {
            Some(s) if s > 0 => cfg.samples = s as usize,
            _ => issues.push(&format!("{path}.samples"), "must be a positive integer"),
        }
    }
    if let Some(x) = obj.get("range") {
        match x.as_i64() {
            Some(r) if r > 0 => cfg.range = r,
            _ => issues.push(&format!("{path}.range"), "must be a positive integer"),
        }
    }
    cfg
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    /// Traces of words in `B`, `dB` split over the diagonal blocks.
    TraceMonomials,
    /// Root sums of logarithmic differentials against their combinatorial form.
    RootSums,
    /// Expansion of a wedge of logarithmic differentials.
    DlogWedge,
    /// Independence of the trace difference from the splitting.
    Splitting,
}

impl Identity {
    /// Accepts role names and the numbered aliases used by the command line.
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "trace-monomials" | "4.3" => Identity::TraceMonomials,
            "root-sums" | "4.4" | "4.5" => Identity::RootSums,
            "dlog-wedge" | "4.6" => Identity::DlogWedge,
            "splitting" | "5.2" => Identity::Splitting,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    CheckBasic,
    Cs { degrees: Vec<usize> },
    Gm,
    VerifyRr { n: usize, symbolic: bool, numeric: bool },
    VerifyIdentities { identity: Identity, len: usize },
    Pushforward,
    Selftest,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    /// Maximal `(N, δ, n)` of the random grid used when no connection is given.
    pub grid: Option<(usize, usize, usize)>,
}

impl RunOptions {
    fn numeric(&self, problem: Option<&ProblemFile>) -> NumericConfig {
        let mut cfg = problem.map(|p| p.numeric.clone()).unwrap_or_default();
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        cfg
    }
}

/// One connection of a run, with the seed that generated it if random.
struct Instance {
    connection: LogConnectionP1,
    seed: Option<u64>,
    /// Degrees `n` to check; a problem-file connection uses the command's own.
    max_n: usize,
}

/// Random basic connections over the grid `N ≤ gN`, `δ ≤ gδ`, two parameters.
pub fn grid_connections(seed: u64, grid: (usize, usize, usize)) -> Vec<(Shape, LogConnectionP1)> {
    let mut out = Vec::new();
    for rank in 1..=grid.0 {
        for delta in 1..=grid.1 {
            let shape = Shape { rank, delta, nparams: 2, family: Family::GaugedDiagonal };
            let stream = (rank * 100 + delta) as u64;
            out.push((shape, random::connection(&mut random::rng(seed, stream), shape)));
        }
    }
    out
}

fn instances(problem: Option<&ProblemFile>, opts: &RunOptions, what: &str) -> Result<Vec<Instance>> {
    if let Some(c) = problem.and_then(|p| p.connection.clone()) {
        if opts.grid.is_none() {
            return Ok(vec![Instance { connection: c, seed: None, max_n: 0 }]);
        }
    }
    match opts.grid {
        Some(g) => {
            let seed = opts.seed.unwrap_or(0);
            Ok(grid_connections(seed, g)
                .into_iter()
                .map(|(_, c)| Instance { connection: c, seed: Some(seed), max_n: g.2 })
                .collect())
        }
        None => Err(Error::Schema(vec![format!("$: `{what}` needs a connection block or --grid")])),
    }
}

fn tag(r: VerificationReport, seed: Option<u64>) -> VerificationReport {
    match seed {
        Some(s) if r.seed.is_none() => r.with_seed(s),
        _ => r,
    }
}

fn check_basic_report(c: &LogConnectionP1) -> Result<VerificationReport> {
    let start = Instant::now();
    let v = c.check_basic()?;
    let mut params = connection_params(c, 0);
    params.as_object_mut().expect("object").remove("n");
    params["basic"] = json!(v.basic);
    let mut r = VerificationReport::new("check-basic", params, Status::from_bool(v.basic));
    if let Some((i, row, col, f)) = &v.witness {
        r = r.with_witness(json!({ "point": i + 1, "row": row + 1, "column": col + 1, "form": form_to_json(f) }));
    }
    Ok(r.timed(start))
}

fn cs_reports(c: &LogConnectionP1, degrees: &[usize]) -> Result<Vec<VerificationReport>> {
    let a = c.total_matrix();
    degrees
        .iter()
        .map(|&p| {
            let start = Instant::now();
            let class = transgress(&a, p)?;
            let defect = transgression_defect(&a, p)?;
            let mut params = connection_params(c, p);
            params["modulus"] = json!(class.modulus);
            params["value"] = form_to_json(&class.form);
            let mut r = VerificationReport::new("cs-transgression", params, Status::from_bool(defect.is_zero()));
            if !defect.is_zero() {
                r = r.with_form_witness(&defect);
            }
            Ok(r.timed(start))
        })
        .collect()
}

fn gm_report(c: &LogConnectionP1) -> Result<VerificationReport> {
    let start = Instant::now();
    let gm = c.gm_data()?;
    let defect = c.diagram_defect(&gm)?;
    let x = c.basic_defects()?;
    let n = c.rank();
    for (tau, xt) in x.iter().enumerate() {
        if defect.block(0, tau, n, n) != xt.neg() {
            return Err(Error::Consistency(format!("diagram defect block {} differs from the curvature defect", tau + 1)));
        }
    }
    let mut params = connection_params(c, 0);
    params.as_object_mut().expect("object").remove("n");
    params["phi_gm"] = matrix_to_json(&gm.phi_gm);
    params["b"] = matrix_to_json(&gm.b);
    let mut r = VerificationReport::new("gm-diagram", params, Status::from_bool(defect.is_zero()));
    if let Some(w) = defect.entries().iter().find(|e| !e.is_zero()) {
        r = r.with_form_witness(w);
    }
    Ok(r.timed(start))
}

fn trace_monomial_reports(c: &LogConnectionP1, len: usize) -> Result<Vec<VerificationReport>> {
    let gm = c.gm_data()?;
    all_words(len)
        .iter()
        .map(|w| {
            let start = Instant::now();
            let d = c.trace_monomial_defect(&gm, w)?;
            let mut params = connection_params(c, 0);
            params.as_object_mut().expect("object").remove("n");
            params["word"] = json!(word_to_string(w));
            let mut r = VerificationReport::new("trace-monomial", params, Status::from_bool(d.is_zero()));
            if !d.is_zero() {
                r = r.with_form_witness(&d);
            }
            Ok(r.timed(start))
        })
        .collect()
}

fn splitting_reports(c: &LogConnectionP1, seed: u64, count: usize) -> Result<Vec<VerificationReport>> {
    let start = Instant::now();
    let gm = c.gm_data()?;
    let base = gm.phi_gm.trace()?.try_sub(&gm.b.trace()?)?;
    let mut rng = random::rng(seed, 7);
    let mut worst = None;
    for _ in 0..count {
        let phi = random::splitting_perturbation(&mut rng, c);
        let d = c.perturb_splitting(&gm, &phi)?.trace_difference()?.try_sub(&base)?;
        if !d.is_zero() {
            worst = Some(d);
            break;
        }
    }
    let mut params = connection_params(c, 0);
    params.as_object_mut().expect("object").remove("n");
    params["perturbations"] = json!(count);
    params["value"] = form_to_json(&base);
    let mut r = VerificationReport::new("splitting-independence", params, Status::from_bool(worst.is_none())).with_seed(seed);
    if let Some(w) = &worst {
        r = r.with_form_witness(w);
    }
    Ok(vec![r.timed(start)])
}

/// Runs a command; `problem` may be absent for commands that can use `--grid`.
pub fn run(cmd: &Command, problem: Option<&ProblemFile>, opts: &RunOptions) -> Result<Vec<VerificationReport>> {
    let cfg = opts.numeric(problem);
    cfg.validate()?;
    let per_instance = |what: &str, f: &(dyn Fn(&Instance) -> Result<Vec<VerificationReport>> + Sync)| -> Result<Vec<VerificationReport>> {
        let inst = instances(problem, opts, what)?;
        let chunks = par_map(&inst, |i| f(i).map(|rs| rs.into_iter().map(|r| tag(r, i.seed)).collect::<Vec<_>>()));
        let mut out = Vec::new();
        for ch in chunks {
            out.extend(ch?);
        }
        Ok(out)
    };
    match cmd {
        Command::CheckBasic => per_instance("check-basic", &|i| Ok(vec![check_basic_report(&i.connection)?])),
        Command::Cs { degrees } => per_instance("cs", &|i| cs_reports(&i.connection, degrees)),
        Command::Gm => per_instance("gm", &|i| Ok(vec![gm_report(&i.connection)?])),
        Command::VerifyRr { n, symbolic, numeric } => {
            let (symbolic, numeric) = if !symbolic && !numeric { (true, true) } else { (*symbolic, *numeric) };
            per_instance("verify-rr", &|i| {
                let degrees: Vec<usize> = if i.max_n == 0 { vec![*n] } else { (1..=i.max_n).collect() };
                let mut out = Vec::new();
                for &d in &degrees {
                    if symbolic {
                        out.push(verify_rr_symbolic(&i.connection, d)?);
                    }
                    if numeric {
                        let cfg = NumericConfig { seed: i.seed.unwrap_or(cfg.seed), ..cfg.clone() };
                        out.push(verify_rr_numeric(&i.connection, d, &cfg)?);
                    }
                }
                Ok(out)
            })
        }
        Command::VerifyIdentities { identity, len } => match identity {
            Identity::TraceMonomials => per_instance("verify-identities", &|i| trace_monomial_reports(&i.connection, *len)),
            Identity::Splitting => per_instance("verify-identities", &|i| splitting_reports(&i.connection, i.seed.unwrap_or(cfg.seed), 50)),
            Identity::DlogWedge => (1..=(*len).max(1)).map(check_dlog_wedge).collect(),
            Identity::RootSums => {
                let delta = match (opts.grid, problem.and_then(|p| p.connection.as_ref())) {
                    (Some(g), _) => g.1,
                    (None, Some(c)) => c.delta(),
                    (None, None) => (*len).max(1),
                };
                let cases: Vec<(usize, Vec<usize>)> =
                    (1..=delta).flat_map(|d| nonempty_subsets(d).into_iter().map(move |j| (d, j))).collect();
                par_map(&cases, |(d, j)| verify_root_sums(*d, j, &cfg)).into_iter().collect()
            }
        },
        Command::Pushforward => {
            let fa = problem
                .and_then(|p| p.pushforward.as_ref())
                .ok_or_else(|| Error::Schema(vec!["$: `pushforward` needs a pushforward block".into()]))?;
            pushforward_checks(fa)
        }
        Command::Selftest => selftest(&cfg),
    }
}

/// A compact pass over every invariant family on seeded inputs.
pub fn selftest(cfg: &NumericConfig) -> Result<Vec<VerificationReport>> {
    let seed = cfg.seed;
    let mut out = Vec::new();

    let start = Instant::now();
    let mut rng = random::rng(seed, 1);
    let mut bad = None;
    for k in 0..10 {
        let a = random::connection_matrix(&mut rng, 3 + k % 3, 1 + k % 3);
        for p in 1..=3 {
            let d = transgression_defect(&a, p)?;
            if !d.is_zero() && bad.is_none() {
                bad = Some(d);
            }
        }
    }
    let mut r = VerificationReport::new("selftest-transgression", json!({ "inputs": 10 }), Status::from_bool(bad.is_none()));
    if let Some(d) = &bad {
        r = r.with_form_witness(d);
    }
    out.push(r.with_seed(seed).timed(start));

    let start = Instant::now();
    let mut ok = true;
    for k in 0..5 {
        let a = random::connection_matrix(&mut rng, 3, 1 + k % 3);
        let vars: Vec<usize> = (0..3).collect();
        let g = random::rational_gauge(&mut rng, a.universe(), a.rows(), &vars);
        let dl = Form::dlog(a.universe(), &g.det()?)?;
        ok &= gauge_delta(&a, &g, 1)? == dl;
    }
    out.push(VerificationReport::new("selftest-gauge-det", json!({ "inputs": 5 }), Status::from_bool(ok)).with_seed(seed).timed(start));

    let grid = grid_connections(seed, (2, 2, 2));
    for (_, c) in &grid {
        out.push(check_basic_report(c)?.with_seed(seed));
        for n in 1..=2 {
            out.push(verify_rr_symbolic(c, n)?.with_seed(seed));
        }
    }
    let (_, c) = &grid[grid.len() - 1];
    let reports = trace_monomial_reports(c, 3)?;
    let ok = reports.iter().all(VerificationReport::passed);
    out.push(VerificationReport::new("selftest-trace-monomials", json!({ "words": reports.len() }), Status::from_bool(ok)).with_seed(seed));
    out.extend(splitting_reports(c, seed, 5)?);
    let small = NumericConfig { samples: 3, ..cfg.clone() };
    out.push(verify_rr_numeric(c, 2, &small)?);
    for r in 1..=3 {
        out.push(check_dlog_wedge(r)?);
    }
    for j in nonempty_subsets(3) {
        out.push(verify_root_sums(3, &j, &small)?);
    }

    let vars = VarUniverse::new(vec![
        Variable { name: "s".into(), kind: VarKind::Parameter },
        Variable { name: "t".into(), kind: VarKind::Fiber },
    ])?;
    let u = GenUniverse::new(vars.clone(), 0)?;
    let fa = FiniteAlgebra::new(&u, &RatFun::parse(&vars, "t^2 - s")?, 1, Vec::new(), None)?;
    out.extend(pushforward_checks(&fa)?);
    Ok(out)
}

/// Exit status of a finished run: 0 when every report passes, 1 otherwise.
pub fn exit_code(reports: &[VerificationReport]) -> i32 {
    if reports.iter().all(VerificationReport::passed) {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "connection": { "points": [{"symbol": "a1"}], "residues": [[["2"]]] }
    }"#;

    #[test]
    fn minimal_problem() {
        let p = parse_problem(MINIMAL).unwrap();
        let c = p.connection.unwrap();
        assert_eq!((c.rank(), c.delta()), (1, 1));
        let r = run(&Command::VerifyRr { n: 1, symbolic: true, numeric: true }, Some(&parse_problem(MINIMAL).unwrap()), &RunOptions::default()).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(VerificationReport::passed));
    }

    #[test]
    fn errors_are_enumerated() {
        let text = r#"{
            "parameters": ["t1", "t1"],
            "connection": {
                "points": [{"symbol": "a1"}, {"symbol": "a1"}],
                "residues": [[["1", "2"]], [["1"]]],
                "bogus": 1
            },
            "numeric": {"tol": -1}
        }"#;
        let Err(Error::Schema(list)) = parse_problem(text) else { panic!("expected schema errors") };
        let joined = list.join("\n");
        assert!(joined.contains("duplicate name `t1`"), "{joined}");
        assert!(joined.contains("duplicate name `a1`"), "{joined}");
        assert!(joined.contains("unknown key `bogus`"), "{joined}");
        assert!(joined.contains("numeric.tol"), "{joined}");
        assert!(list.len() >= 4);
    }

    #[test]
    fn non_square_residue() {
        let text = r#"{"connection": {"points": [{"symbol": "a1"}], "residues": [[["1", "2"]]]}}"#;
        let Err(Error::Schema(list)) = parse_problem(text) else { panic!() };
        assert!(list[0].contains("not square"), "{list:?}");
    }

    #[test]
    fn syntax_errors_have_positions() {
        match parse_problem("{\n  \"connection\": }") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn forms_and_matrices_round_trip() {
        let p = parse_problem(
            r#"{"parameters": ["t1", "t2"],
                "connection": {"points": [{"symbol": "a1"}, {"value": "3/2"}],
                               "residues": [[["2"]], [["-1/3"]]],
                               "phi": [[[{"coeff": "t1", "gens": ["dt2"]}]]]}}"#,
        )
        .unwrap();
        let c = p.connection.unwrap();
        let m = c.total_matrix();
        let j = matrix_to_json(&m);
        let back = matrix_from_json(c.gens(), &j).unwrap();
        assert_eq!(back, m);
        assert_eq!(matrix_to_json(&back), j);
        let text = j.to_string();
        assert_eq!(matrix_from_json(c.gens(), &serde_json::from_str(&text).unwrap()).unwrap(), m);
    }

    #[test]
    fn pushforward_block() {
        let p = parse_problem(r#"{"pushforward": {"base": ["s"], "phi": "t^2 - s"}}"#).unwrap();
        let r = run(&Command::Pushforward, Some(&p), &RunOptions::default()).unwrap();
        assert!(r.iter().all(VerificationReport::passed));
        let bad = parse_problem(r#"{"pushforward": {"base": ["s"], "phi": "(t - s)^2"}}"#);
        assert!(matches!(bad, Err(Error::Schema(_))));
    }

    #[test]
    fn grid_runs_are_deterministic() {
        let opts = RunOptions { seed: Some(5), tol: None, grid: Some((2, 2, 1)) };
        let a = run(&Command::VerifyRr { n: 1, symbolic: true, numeric: false }, None, &opts).unwrap();
        let b = run(&Command::VerifyRr { n: 1, symbolic: true, numeric: false }, None, &opts).unwrap();
        let strip = |v: &[VerificationReport]| v.iter().map(|r| (r.check.clone(), r.params.clone(), r.status)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.len(), 4);
        assert!(run(&Command::Gm, None, &RunOptions::default()).is_err());
    }
}
