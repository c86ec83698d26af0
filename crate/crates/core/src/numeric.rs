//! Floating-point oracle: evaluates the Riemann-Roch right-hand side through
//! the actual roots of `F(z) = Σ_τ a_τ Π_{θ≠τ}(z - a_θ) - Π_τ(z - a_τ)`,
//! the denominator of `1 + Σ_τ a_τ/(z - a_τ)`, independently of the
//! combinatorial expansion.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exterior::{Form, GenUniverse, NumForm};
use crate::logconn::{universe, LogConnectionP1, Point};
use crate::par::par_map;
use crate::random::{nonzero_rational, rng, TestRng};
use crate::ratfun::{coeff_to_f64, Coeff, Poly, RatFun, VarUniverse};
use crate::report::{Status, VerificationReport};
use crate::rr::root_sum_combinatorial_in;

#[derive(Debug, Clone, PartialEq)]
pub struct NumericConfig {
    pub seed: u64,
    /// Sampled values are rationals in `[-range, range]`.
    pub range: i64,
    pub tol: f64,
    pub floor: f64,
    pub max_attempts: usize,
    pub samples: usize,
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig { seed: 0, range: 8, tol: 1e-9, floor: 1e-12, max_attempts: 20, samples: 10 }
    }
}

impl NumericConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Numeric("tolerance must be positive".into()));
        }
        if self.floor.is_nan() || self.floor < 0.0 || self.max_attempts == 0 || self.range < 1 {
            return Err(Error::Numeric("floor, attempts and range must be positive".into()));
        }
        Ok(())
    }
}

/// Root backward error accepted after polishing.
const BACKWARD_ERROR: f64 = 1e-12;
/// Minimal relative root separation, and distance of a root from a pole.
const SEPARATION: f64 = 1e-6;

/// Exact coefficients of `F`, lowest degree first.
pub fn build_f(points: &[Coeff]) -> Result<Vec<Coeff>> {
    if points.is_empty() {
        return Err(Error::InvalidConnection("no points".into()));
    }
    for (i, a) in points.iter().enumerate() {
        if a.is_zero() {
            return Err(Error::InvalidConnection(format!("point {} is zero", i + 1)));
        }
        if points[..i].contains(a) {
            return Err(Error::InvalidConnection(format!("point {} coincides with an earlier point", i + 1)));
        }
    }
    let linear = |a: &Coeff| vec![-a.clone(), Coeff::one()];
    let mut all = vec![Coeff::one()];
    for a in points {
        all = umul(&all, &linear(a));
    }
    let mut f: Vec<Coeff> = all.iter().map(|c| -c.clone()).collect();
    for (tau, a) in points.iter().enumerate() {
        let mut p = vec![a.clone()];
        for (theta, b) in points.iter().enumerate() {
            if theta != tau {
                p = umul(&p, &linear(b));
            }
        }
        for (k, c) in p.into_iter().enumerate() {
            f[k] += c;
        }
    }
    Ok(f)
}

fn umul(a: &[Coeff], b: &[Coeff]) -> Vec<Coeff> {
    let mut out = vec![Coeff::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn horner(c: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::zero();
    let mut dp = Complex64::zero();
    for &ck in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + ck;
    }
    (p, dp)
}

fn backward_error(c: &[f64], x: Complex64) -> f64 {
    let cc: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let (p, _) = horner(&cc, x);
    let scale: f64 = c.iter().enumerate().map(|(k, v)| v.abs() * x.norm().powi(k as i32)).sum();
    if scale == 0.0 {
        0.0
    } else {
        p.norm() / scale
    }
}

/// Roots of a real polynomial given lowest degree first: companion-matrix
/// eigenvalues polished by Newton steps. Fails on a large backward error
/// or on roots closer than the separation threshold.
pub fn find_roots(c: &[f64]) -> Result<Vec<Complex64>> {
    let mut c = c.to_vec();
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    let d = c.len() - 1;
    if d == 0 {
        return Err(Error::Numeric("constant polynomial has no roots".into()));
    }
    let lc = c[d];
    let monic: Vec<f64> = c.iter().map(|v| v / lc).collect();
    let mut roots: Vec<Complex64> = if d == 1 {
        vec![Complex64::new(-monic[0], 0.0)]
    } else {
        let mut m = DMatrix::<f64>::zeros(d, d);
        for i in 1..d {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..d {
            m[(i, d - 1)] = -monic[i];
        }
        m.complex_eigenvalues().iter().copied().collect()
    };
    let cm: Vec<Complex64> = monic.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for r in roots.iter_mut() {
        for _ in 0..8 {
            let (p, dp) = horner(&cm, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            *r -= step;
            if step.norm() <= 1e-17 * r.norm().max(1.0) {
                break;
            }
        }
        let be = backward_error(&monic, *r);
        if be.is_nan() || be >= BACKWARD_ERROR {
            return Err(Error::Numeric(format!("root backward error {be:e}")));
        }
    }
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    for i in 0..d {
        for j in 0..i {
            if (roots[i] - roots[j]).norm() <= SEPARATION * scale {
                return Err(Error::Numeric("clustered roots".into()));
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// `F` as a polynomial over a variable universe, with its derivatives.
#[derive(Debug, Clone)]
pub struct RootSystem {
    vars: Arc<VarUniverse>,
    fiber: usize,
    points: Vec<RatFun>,
    f: RatFun,
    f_z: Poly,
    /// `(variable, ∂F/∂variable)` for each variable `F` depends on besides the fiber.
    f_a: Vec<(usize, Poly)>,
}

/// One sampled configuration with its roots and their first derivatives.
#[derive(Debug, Clone)]
pub struct Sample {
    pub index: usize,
    /// Exact sampled values for every variable but the fiber.
    pub exact: Vec<(usize, Coeff)>,
    /// Numeric assignment with the fiber set to zero.
    pub point: Vec<Complex64>,
    pub point_values: Vec<Complex64>,
    pub roots: Vec<Complex64>,
    /// `dbeta[i][v] = ∂β_i/∂(variable v)`; zero for variables `F` ignores.
    pub dbeta: Vec<Vec<Complex64>>,
}

impl RootSystem {
    pub fn new(vars: &Arc<VarUniverse>, fiber: usize, points: Vec<RatFun>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConnection("no points".into()));
        }
        let z = RatFun::var(vars, fiber);
        let mut all = RatFun::one(vars);
        for a in &points {
            all = &all * &(&z - a);
        }
        let mut f = all.neg();
        for (tau, a) in points.iter().enumerate() {
            let mut p = a.clone();
            for (theta, b) in points.iter().enumerate() {
                if theta != tau {
                    p = &p * &(&z - b);
                }
            }
            f = &f + &p;
        }
        if !f.is_polynomial() {
            return Err(Error::InvalidConnection("points must be polynomial in the variables".into()));
        }
        let num = f.numer();
        let f_z = num.derivative(fiber);
        let f_a = (0..vars.len())
            .filter(|&v| v != fiber && num.depends_on(v))
            .map(|v| (v, num.derivative(v)))
            .collect();
        Ok(RootSystem { vars: vars.clone(), fiber, points, f, f_z, f_a })
    }

    pub fn for_connection(c: &LogConnectionP1) -> Result<Self> {
        let points = (0..c.delta()).map(|nu| c.point_value(nu).clone()).collect();
        RootSystem::new(c.vars(), c.fiber(), points)
    }

    /// `F` as a rational function of the variables.
    pub fn f(&self) -> &RatFun {
        &self.f
    }

    /// Draws rationals for every non-fiber variable and solves `F = 0`.
    pub fn draw(&self, rng: &mut TestRng, cfg: &NumericConfig, index: usize) -> Result<Sample> {
        let nv = self.vars.len();
        let mut exact = Vec::with_capacity(nv);
        let mut point = vec![Complex64::zero(); nv];
        for v in 0..nv {
            if v != self.fiber {
                let q = nonzero_rational(rng, cfg.range);
                point[v] = Complex64::new(coeff_to_f64(&q), 0.0);
                exact.push((v, q));
            }
        }
        self.solve_at(index, exact, point, cfg)
    }

    fn solve_at(&self, index: usize, exact: Vec<(usize, Coeff)>, point: Vec<Complex64>, cfg: &NumericConfig) -> Result<Sample> {
        let mut point_values = Vec::with_capacity(self.points.len());
        for a in &self.points {
            point_values.push(a.eval_numeric(&point, cfg.floor)?);
        }
        let scale = point_values.iter().map(|a| a.norm()).fold(1.0, f64::max);
        for (i, a) in point_values.iter().enumerate() {
            if a.norm() <= SEPARATION * scale || point_values[..i].iter().any(|b| (a - b).norm() <= SEPARATION * scale) {
                return Err(Error::Numeric("sampled points are zero or coincide".into()));
            }
        }
        let roots = self.roots_at(&point)?;
        let rscale = roots.iter().map(|r| r.norm()).fold(scale, f64::max);
        let mut dbeta = Vec::with_capacity(roots.len());
        for &beta in &roots {
            if beta.norm() <= SEPARATION * rscale || point_values.iter().any(|a| (beta - a).norm() <= SEPARATION * rscale) {
                return Err(Error::Numeric("root collides with a pole".into()));
            }
            let mut at = point.clone();
            at[self.fiber] = beta;
            let fz = self.f_z.eval_complex(&at);
            if fz.norm() <= cfg.floor * self.f_z.eval_abs_scale(&at).max(f64::MIN_POSITIVE) {
                return Err(Error::Numeric("F' vanishes at a root".into()));
            }
            let mut row = vec![Complex64::zero(); self.vars.len()];
            for (v, fa) in &self.f_a {
                row[*v] = -fa.eval_complex(&at) / fz;
            }
            dbeta.push(row);
        }
        Ok(Sample { index, exact, point, point_values, roots, dbeta })
    }

    fn roots_at(&self, point: &[Complex64]) -> Result<Vec<Complex64>> {
        let coeffs: Vec<f64> = self.f.numer().coefficients_in(self.fiber).iter().map(|p| p.eval_complex(point).re).collect();
        find_roots(&coeffs)
    }

    /// Largest error of the implicit derivatives against central differences
    /// with step `h`, relative to `max(|∂β|, 1)`.
    pub fn finite_difference_error(&self, s: &Sample, h: f64) -> Result<f64> {
        let mut worst = 0.0f64;
        for (v, _) in &self.f_a {
            let mut plus = s.point.clone();
            let mut minus = s.point.clone();
            plus[*v] += h;
            minus[*v] -= h;
            let rp = self.roots_at(&plus)?;
            let rm = self.roots_at(&minus)?;
            for (i, &beta) in s.roots.iter().enumerate() {
                let near = |rs: &[Complex64]| {
                    *rs.iter().min_by(|a, b| (*a - beta).norm().total_cmp(&(*b - beta).norm())).expect("roots")
                };
                let fd = (near(&rp) - near(&rm)) / (2.0 * h);
                let an = s.dbeta[i][*v];
                worst = worst.max((fd - an).norm() / an.norm().max(1.0));
            }
        }
        Ok(worst)
    }
}

fn resamplable(e: &Error) -> bool {
    matches!(e, Error::Numeric(_) | Error::NearZeroDenominator { .. } | Error::PoleHit { .. } | Error::DivisionByZero)
}

/// Runs `f` on fresh samples until one is nondegenerate. Sample `index`
/// uses RNG streams `index·max_attempts + attempt`, so results depend only
/// on `(seed, index)`.
pub fn with_resampling<T>(
    rs: &RootSystem,
    cfg: &NumericConfig,
    index: usize,
    f: impl Fn(&Sample) -> Result<T>,
) -> Result<T> {
    let mut last = None;
    for attempt in 0..cfg.max_attempts {
        let mut r = rng(cfg.seed, (index * cfg.max_attempts + attempt) as u64);
        match rs.draw(&mut r, cfg, index).and_then(|s| f(&s)) {
            Ok(v) => return Ok(v),
            Err(e) if resamplable(&e) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Numeric(format!(
        "resampling exhausted after {} attempts: {}",
        cfg.max_attempts,
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// `-Σ_i bundle|_{z=β_i} + bundle|_{z=0}` at a sample, and the largest
/// norm among the summands.
pub fn rhs_at(gens: &Arc<GenUniverse>, fiber: usize, bundle: &Form, s: &Sample, floor: f64) -> Result<(NumForm, f64)> {
    let mut images: Vec<NumForm> = (0..gens.len()).map(NumForm::generator).collect();
    images[fiber] = NumForm::default();
    let mut out = bundle.eval_numeric_mapped(&s.point, floor, &images)?;
    let mut scale = out.max_norm();
    for (i, &beta) in s.roots.iter().enumerate() {
        let mut dz = NumForm::default();
        for (v, d) in s.dbeta[i].iter().enumerate() {
            if *d != Complex64::zero() {
                dz.add_term(1 << v, *d);
            }
        }
        images[fiber] = dz;
        let mut at = s.point.clone();
        at[fiber] = beta;
        let term = bundle.eval_numeric_mapped(&at, floor, &images)?;
        scale = scale.max(term.max_norm());
        out.sub_assign(&term);
    }
    Ok((out, scale))
}

/// Right-hand side through the roots at the first sample of `cfg`.
pub fn eval_rhs_direct(c: &LogConnectionP1, n: usize, cfg: &NumericConfig) -> Result<(Sample, NumForm)> {
    cfg.validate()?;
    let rs = RootSystem::for_connection(c)?;
    let bundle = c.nw_bundle(n)?.form;
    with_resampling(&rs, cfg, 0, |s| {
        let (rhs, _) = rhs_at(c.gens(), c.fiber(), &bundle, s, cfg.floor)?;
        Ok((s.clone(), rhs))
    })
}

fn relative(a: &NumForm, b: &NumForm, scale: f64) -> f64 {
    let d = a.distance(b);
    if d == 0.0 {
        0.0
    } else {
        d / scale.max(a.max_norm()).max(b.max_norm()).max(f64::MIN_POSITIVE)
    }
}

fn sample_json(vars: &VarUniverse, s: &Sample) -> Value {
    let mut m = serde_json::Map::new();
    for (v, q) in &s.exact {
        m.insert(vars.name(*v).to_string(), json!(q.to_string()));
    }
    Value::Object(m)
}

/// Numeric Riemann-Roch at `cfg.samples` random specializations.
pub fn verify_rr_numeric(c: &LogConnectionP1, n: usize, cfg: &NumericConfig) -> Result<VerificationReport> {
    let lhs = c.nw_gm(n)?;
    verify_rr_numeric_against(&lhs, c, n, cfg)
}

/// Compares a given left-hand side with the numeric right-hand side of `c`;
/// used to show that corrupting one side is detected.
pub fn verify_rr_numeric_against(lhs: &Form, c: &LogConnectionP1, n: usize, cfg: &NumericConfig) -> Result<VerificationReport> {
    let start = Instant::now();
    cfg.validate()?;
    let rs = RootSystem::for_connection(c)?;
    let bundle = c.nw_bundle(n)?.form;
    let indices: Vec<usize> = (0..cfg.samples).collect();
    let results = par_map(&indices, |&k| {
        with_resampling(&rs, cfg, k, |s| {
            let (rhs, scale) = rhs_at(c.gens(), c.fiber(), &bundle, s, cfg.floor)?;
            let l = lhs.eval_numeric(&s.point, cfg.floor)?;
            Ok((relative(&l, &rhs, scale), sample_json(c.vars(), s)))
        })
    });
    let mut worst = (0.0f64, Value::Null, 0usize);
    for (k, r) in results.into_iter().enumerate() {
        let (e, pt) = r?;
        if e > worst.0 || worst.1.is_null() {
            worst = (e, pt, k);
        }
    }
    let ok = worst.0 < cfg.tol;
    let mut params = crate::rr::connection_params(c, n);
    params["samples"] = json!(cfg.samples);
    params["tol"] = json!(cfg.tol);
    let r = VerificationReport::new("verify-rr-numeric", params, Status::from_bool(ok))
        .with_witness(json!({ "max_relative_error": worst.0, "worst_sample": worst.2, "point": worst.1 }))
        .with_seed(cfg.seed);
    Ok(r.timed(start))
}

/// `Σ_i ⋀_s dlog(β_i - a_{j_s})` at a sample, `J` one-based.
fn root_side(s: &Sample, point_vars: &[Option<usize>], j: &[usize]) -> NumForm {
    let mut out = NumForm::default();
    for (i, &beta) in s.roots.iter().enumerate() {
        let mut w = NumForm::scalar(Complex64::one());
        for &jj in j {
            let mut f = NumForm::default();
            for (v, d) in s.dbeta[i].iter().enumerate() {
                if *d != Complex64::zero() {
                    f.add_term(1 << v, *d);
                }
            }
            if let Some(v) = point_vars[jj - 1] {
                f.add_term(1 << v, -Complex64::one());
            }
            w = w.wedge(&f.scale(Complex64::one() / (beta - s.point_values[jj - 1])));
        }
        out.add_assign(&w);
    }
    out
}

/// Root-sum side against the combinatorial sum over `t ∉ J`, and against
/// the middle expression `Σ_s (-1)^{s-1} dlog F(a_{j_s}) ∧ ⋀_{q≠s} dlog(a_{j_s} - a_{j_q})`.
pub fn verify_root_sums(delta: usize, j: &[usize], cfg: &NumericConfig) -> Result<VerificationReport> {
    let start = Instant::now();
    cfg.validate()?;
    let names: Vec<Point> = (1..=delta).map(|i| Point::Symbol(format!("a{i}"))).collect();
    let gens = universe(&names, &[])?;
    let vars = gens.vars().clone();
    let fiber = delta;
    let a = |k: usize| RatFun::var(&vars, k - 1);
    let rs = RootSystem::new(&vars, fiber, (1..=delta).map(a).collect())?;
    let comb = root_sum_combinatorial_in(&gens, delta, j)?;
    let mut middle = Form::zero(&gens);
    for (s, &js) in j.iter().enumerate() {
        let f_at = rs.f().substitute(fiber, &a(js))?;
        let mut w = Form::dlog(&gens, &f_at)?;
        for &jq in j {
            if jq != js {
                w = w.wedge(&Form::dlog(&gens, &(&a(js) - &a(jq)))?);
            }
        }
        if s % 2 == 1 {
            w = w.neg();
        }
        middle.add_assign(&w);
    }
    let mut base = Form::one(&gens);
    for &js in j {
        base = base.wedge(&Form::dlog(&gens, &a(js))?);
    }
    let point_vars: Vec<Option<usize>> = (0..delta).map(Some).collect();
    let indices: Vec<usize> = (0..cfg.samples).collect();
    let results = par_map(&indices, |&k| {
        with_resampling(&rs, cfg, k, |s| {
            let roots = root_side(s, &point_vars, j);
            let b = base.eval_numeric(&s.point, cfg.floor)?;
            let cv = comb.eval_numeric(&s.point, cfg.floor)?;
            let mv = middle.eval_numeric(&s.point, cfg.floor)?;
            let mut reduced = roots.clone();
            reduced.sub_assign(&b);
            let scale = roots.max_norm().max(b.max_norm());
            Ok((relative(&reduced, &cv, scale), relative(&roots, &mv, 0.0)))
        })
    });
    let (mut e_comb, mut e_mid) = (0.0f64, 0.0f64);
    for r in results {
        let (x, y) = r?;
        e_comb = e_comb.max(x);
        e_mid = e_mid.max(y);
    }
    let ok = e_comb < cfg.tol && e_mid < cfg.tol;
    let r = VerificationReport::new(
        "root-sums",
        json!({ "delta": delta, "J": j, "samples": cfg.samples, "tol": cfg.tol }),
        Status::from_bool(ok),
    )
    .with_witness(json!({ "root_vs_combinatorial": e_comb, "root_vs_middle": e_mid }))
    .with_seed(cfg.seed);
    Ok(r.timed(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matform::MatForm;

    fn q(n: i64, d: i64) -> Coeff {
        Coeff::new(n.into(), d.into())
    }

    #[test]
    fn f_worked_values() {
        assert_eq!(build_f(&[q(3, 1)]).unwrap(), vec![q(6, 1), q(-1, 1)]);
        assert_eq!(build_f(&[q(1, 1), q(2, 1)]).unwrap(), vec![q(-6, 1), q(6, 1), q(-1, 1)]);
        assert!(build_f(&[q(0, 1)]).is_err());
        assert!(build_f(&[q(1, 1), q(1, 1)]).is_err());
        let f = build_f(&[q(1, 2), q(-3, 1), q(5, 7), q(2, 1)]).unwrap();
        assert_eq!(f.last().unwrap(), &q(-1, 1));
    }

    #[test]
    fn roots_of_worked_quadratic() {
        let r = find_roots(&[-6.0, 6.0, -1.0]).unwrap();
        let s = 3f64.sqrt();
        assert!((r[0].re - (3.0 - s)).abs() < 1e-14);
        assert!((r[1].re - (3.0 + s)).abs() < 1e-14);
        assert!(find_roots(&[1.0, -2.0, 1.0]).is_err());
    }

    #[test]
    fn derivatives_single_point() {
        let gens = universe(&[Point::Symbol("a1".into())], &[]).unwrap();
        let vars = gens.vars().clone();
        let rs = RootSystem::new(&vars, 1, vec![RatFun::var(&vars, 0)]).unwrap();
        let cfg = NumericConfig::default();
        let s = rs.draw(&mut rng(3, 0), &cfg, 0).unwrap();
        assert!((s.roots[0] - 2.0 * s.point[0]).norm() < 1e-12);
        assert!((s.dbeta[0][0] - 2.0).norm() < 1e-12);
    }

    #[test]
    fn derivatives_match_differences_and_vieta() {
        let names: Vec<Point> = (1..=4).map(|i| Point::Symbol(format!("a{i}"))).collect();
        let gens = universe(&names, &[]).unwrap();
        let vars = gens.vars().clone();
        let rs = RootSystem::new(&vars, 4, (0..4).map(|k| RatFun::var(&vars, k)).collect()).unwrap();
        let cfg = NumericConfig::default();
        for k in 0..10 {
            let s = with_resampling(&rs, &cfg, k, |s| Ok(s.clone())).unwrap();
            assert!(rs.finite_difference_error(&s, 1e-6).unwrap() < 1e-5);
            // -c3/c4 with c4 = -1: c3 = Σa_τ + Σa_τ = 2Σa.
            let sum: Complex64 = s.roots.iter().sum();
            let expect: f64 = 2.0 * s.point[..4].iter().map(|a| a.re).sum::<f64>();
            assert!((sum.re - expect).abs() < 1e-10 * expect.abs().max(1.0));
        }
    }

    fn scalar_connection(lams: &[i64]) -> LogConnectionP1 {
        let names: Vec<Point> = (1..=lams.len()).map(|i| Point::Symbol(format!("a{i}"))).collect();
        let gens = universe(&names, &["t1".into(), "t2".into()]).unwrap();
        let res = lams
            .iter()
            .map(|&l| MatForm::from_scalars(&gens, &[vec![RatFun::from_int(gens.vars(), l)]]).unwrap())
            .collect();
        let t1 = RatFun::parse(gens.vars(), "t1").unwrap();
        let phi = Form::scalar(&gens, t1).wedge(&Form::dvar(&gens, gens.vars().index_of("t2").unwrap()));
        let phi = MatForm::from_fn(&gens, 1, 1, |_, _| phi.clone());
        LogConnectionP1::new(&gens, names, res, phi).unwrap()
    }

    #[test]
    fn single_point_terms_cancel() {
        let c = scalar_connection(&[3]);
        let (_, rhs) = eval_rhs_direct(&c, 1, &NumericConfig::default()).unwrap();
        assert!(rhs.max_norm() < 1e-12);
    }

    #[test]
    fn worked_second_degree_case() {
        let c = scalar_connection(&[2, -1]);
        let cfg = NumericConfig::default();
        for n in 1..=2 {
            let r = verify_rr_numeric(&c, n, &cfg).unwrap();
            assert!(r.passed(), "{r:?}");
        }
        // Corrupting one side is seen.
        let lhs = c.nw_gm(2).unwrap().scale_int(2);
        assert!(!verify_rr_numeric_against(&lhs, &c, 2, &cfg).unwrap().passed());
    }

    #[test]
    fn root_sums_small() {
        let cfg = NumericConfig { samples: 3, ..NumericConfig::default() };
        for delta in 1..=3 {
            for j in crate::rr::nonempty_subsets(delta) {
                let r = verify_root_sums(delta, &j, &cfg).unwrap();
                assert!(r.passed(), "{r:?}");
            }
        }
    }
}
