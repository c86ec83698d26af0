//! Seeded generators for test inputs. Every generator is a pure function of
//! its RNG state, so a `(seed, stream)` pair reproduces an input exactly.

use std::sync::Arc;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exterior::{Form, GenUniverse};
use crate::logconn::{universe, LogConnectionP1, Point};
use crate::matform::MatForm;
use crate::ratfun::{Coeff, RatFun, VarUniverse};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64, stream: u64) -> TestRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Nonzero rational `p/q` with `1 ≤ q ≤ 9` and `|p/q| ≤ range`.
pub fn nonzero_rational(rng: &mut TestRng, range: i64) -> Coeff {
    let range = range.max(1);
    loop {
        let q: i64 = rng.gen_range(1..=9);
        let p: i64 = rng.gen_range(-range * q..=range * q);
        if p != 0 {
            return Coeff::new(BigInt::from(p), BigInt::from(q));
        }
    }
}

/// Small rational, possibly zero, with denominator at most 3.
pub fn small_rational(rng: &mut TestRng, range: i64) -> Coeff {
    let q: i64 = rng.gen_range(1..=3);
    let p: i64 = rng.gen_range(-range * q..=range * q);
    Coeff::new(BigInt::from(p), BigInt::from(q))
}

/// Polynomial in the listed variables with at most `terms` terms of total
/// degree at most `max_deg`.
pub fn poly_in(rng: &mut TestRng, vars: &Arc<VarUniverse>, allowed: &[usize], terms: usize, max_deg: u32) -> RatFun {
    let mut out = RatFun::zero(vars);
    for _ in 0..terms {
        let mut t = RatFun::constant(vars, nonzero_rational(rng, 3));
        if !allowed.is_empty() {
            let deg = rng.gen_range(0..=max_deg);
            for _ in 0..deg {
                let v = allowed[rng.gen_range(0..allowed.len())];
                t = &t * &RatFun::var(vars, v);
            }
        }
        out = &out + &t;
    }
    out
}

/// 1-form `Σ c·dg` over the generators `gens_pool`, coefficients polynomial in `coeff_vars`.
pub fn one_form(
    rng: &mut TestRng,
    u: &Arc<GenUniverse>,
    coeff_vars: &[usize],
    gens_pool: &[usize],
    terms: usize,
) -> Form {
    let mut out = Form::zero(u);
    for _ in 0..terms {
        let g = gens_pool[rng.gen_range(0..gens_pool.len())];
        let c = poly_in(rng, u.vars(), coeff_vars, 2, 1);
        out.add_assign(&Form::term(u, 1 << g, c));
    }
    out
}

/// Matrix of 1-forms with roughly `density` of the entries nonzero.
pub fn one_form_matrix(
    rng: &mut TestRng,
    u: &Arc<GenUniverse>,
    rows: usize,
    cols: usize,
    coeff_vars: &[usize],
    gens_pool: &[usize],
    density: f64,
) -> MatForm {
    MatForm::from_fn(u, rows, cols, |_, _| {
        if rng.gen_bool(density) {
            let terms = rng.gen_range(1..=2);
            one_form(rng, u, coeff_vars, gens_pool, terms)
        } else {
            Form::zero(u)
        }
    })
}

/// Matrix of small rational constants, about half of them zero off the diagonal.
pub fn rational_matrix(rng: &mut TestRng, u: &Arc<GenUniverse>, n: usize) -> MatForm {
    MatForm::from_fn(u, n, n, |i, j| {
        if i == j || rng.gen_bool(0.5) {
            Form::scalar(u, RatFun::constant(u.vars(), small_rational(rng, 3)))
        } else {
            Form::zero(u)
        }
    })
}

/// Gauge transformations with polynomial entries and determinant a nonzero
/// constant: a product of a constant diagonal and an elementary matrix.
pub fn polynomial_gauge(rng: &mut TestRng, u: &Arc<GenUniverse>, n: usize, coeff_vars: &[usize]) -> MatForm {
    let mut g = MatForm::identity(u, n);
    for i in 0..n {
        g.set(i, i, Form::scalar(u, RatFun::constant(u.vars(), nonzero_rational(rng, 3))));
    }
    if n >= 2 {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n - 1));
        let j = if j >= i { j + 1 } else { j };
        let x = poly_in(rng, u.vars(), coeff_vars, 2, 1);
        let mut e = MatForm::identity(u, n);
        e.set(i, j, Form::scalar(u, x));
        g = e.try_mul(&g).expect("square");
    }
    g
}

/// Gauge transformation with rational-function entries: `1 + x` on the diagonal
/// and a polynomial off it, for testing the general identities.
pub fn rational_gauge(rng: &mut TestRng, u: &Arc<GenUniverse>, n: usize, coeff_vars: &[usize]) -> MatForm {
    loop {
        let g = MatForm::from_fn(u, n, n, |i, j| {
            let mut c = poly_in(rng, u.vars(), coeff_vars, 2, 1);
            if i == j {
                c = &c + &RatFun::one(u.vars());
            }
            Form::scalar(u, c)
        });
        if matches!(g.det(), Ok(d) if !d.is_zero()) {
            return g;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Constant residues and an arbitrary base part; generally not basic.
    Generic,
    /// `A^ν = λ_ν·1`; basic for every base part.
    Scalar,
    /// Constant diagonal residues with a diagonal base part; basic.
    Diagonal,
    /// A diagonal connection transformed by a base gauge; basic with
    /// non-constant, non-diagonal residues.
    GaugedDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub rank: usize,
    pub delta: usize,
    pub nparams: usize,
    pub family: Family,
}

/// Random connection with symbolic points `a1..` and parameters `t1..`.
pub fn connection(rng: &mut TestRng, shape: Shape) -> LogConnectionP1 {
    let Shape { rank: n, delta, nparams, family } = shape;
    let points: Vec<Point> = (1..=delta).map(|i| Point::Symbol(format!("a{i}"))).collect();
    let params: Vec<String> = (1..=nparams).map(|i| format!("t{i}")).collect();
    let u = universe(&points, &params).expect("small universe");
    let base: Vec<usize> = (0..delta + nparams).collect();
    let gens_pool: Vec<usize> = if nparams > 0 { (delta..delta + nparams).chain(0..delta).collect() } else { base.clone() };
    let density = if n == 1 { 1.0 } else { 0.6 };
    let (residues, phi) = match family {
        Family::Generic => {
            let res = (0..delta).map(|_| rational_matrix(rng, &u, n)).collect();
            (res, one_form_matrix(rng, &u, n, n, &base, &gens_pool, density))
        }
        Family::Scalar => {
            let res = (0..delta)
                .map(|_| {
                    let l = RatFun::constant(u.vars(), small_rational(rng, 3));
                    MatForm::identity(&u, n).scale(&l)
                })
                .collect();
            (res, one_form_matrix(rng, &u, n, n, &base, &gens_pool, density))
        }
        Family::Diagonal | Family::GaugedDiagonal => {
            let diag = |rng: &mut TestRng, f: &mut dyn FnMut(&mut TestRng) -> Form| {
                let mut m = MatForm::zero(&u, n, n);
                for i in 0..n {
                    m.set(i, i, f(rng));
                }
                m
            };
            let res: Vec<MatForm> = (0..delta)
                .map(|_| diag(rng, &mut |r| Form::scalar(&u, RatFun::constant(u.vars(), small_rational(r, 3)))))
                .collect();
            let phi = diag(rng, &mut |r| one_form(r, &u, &base, &gens_pool, 2));
            if family == Family::Diagonal {
                (res, phi)
            } else {
                let g = polynomial_gauge(rng, &u, n, &base);
                let gi = g.inverse().expect("unit determinant");
                let res = res.iter().map(|a| g.try_mul(a).and_then(|x| x.try_mul(&gi)).expect("square")).collect();
                (res, phi.gauge(&g).expect("invertible"))
            }
        }
    };
    LogConnectionP1::new(&u, points, residues, phi).expect("valid random connection")
}

/// Random splitting perturbation, `Nδ x N` of 1-forms on the base.
pub fn splitting_perturbation(rng: &mut TestRng, c: &LogConnectionP1) -> MatForm {
    let u = c.gens();
    let mut base: Vec<usize> = (0..c.vars().len()).filter(|&v| v != c.fiber()).collect();
    if base.is_empty() {
        base.push(0);
    }
    one_form_matrix(rng, u, c.rank() * c.delta(), c.rank(), &base, &base, 0.7)
}

/// Gauge-theory input: an `n x n` matrix of 1-forms over `nvars ≤ 5` variables.
pub fn connection_matrix(rng: &mut TestRng, nvars: usize, n: usize) -> MatForm {
    let names: Vec<String> = (1..=nvars).map(|i| format!("x{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let u = GenUniverse::new(VarUniverse::parameters(&refs).expect("names"), 0).expect("small");
    let vars: Vec<usize> = (0..nvars).collect();
    one_form_matrix(rng, &u, n, n, &vars, &vars, 0.7)
}

/// Monic polynomial in `t` over `Q(s)` of degree `deg`, lowest degree first,
/// with coefficients polynomial in `s` of degree at most 2.
pub fn monic_over(rng: &mut TestRng, vars: &Arc<VarUniverse>, s: usize, deg: usize) -> Vec<RatFun> {
    let mut coeffs: Vec<RatFun> = (0..deg)
        .map(|_| {
            let terms = rng.gen_range(1..=2);
            poly_in(rng, vars, &[s], terms, 2)
        })
        .collect();
    coeffs.push(RatFun::one(vars));
    coeffs
}
