//! Transgression forms for the power-sum invariant `Tr(M^p)` and the
//! conversion between power-sum and elementary-symmetric classes.

use std::sync::Arc;

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{Form, GenUniverse, Mask};
use crate::matform::MatForm;
use crate::ratfun::{Coeff, RatFun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modulus {
    /// Equality as literal forms.
    Literal,
    /// Class modulo exact forms.
    ModExact,
    /// Class modulo exact forms and `dlog` of units.
    ModDlogUnits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CSClass {
    pub degree: usize,
    pub form: Form,
    pub modulus: Modulus,
}

impl CSClass {
    pub fn new(degree: usize, form: Form, modulus: Modulus) -> Result<Self> {
        if !form.is_homogeneous_of(2 * degree as u32 - 1) {
            return Err(Error::Degree(format!("class of degree {degree} needs a {}-form", 2 * degree - 1)));
        }
        Ok(CSClass { degree, form, modulus })
    }
}

fn ratio(n: i64, d: i64) -> Coeff {
    Coeff::new(BigInt::from(n), BigInt::from(d))
}

/// `Σ_{i,j} X_ij ∧ Y_ji` without building the product.
pub fn trace_of_product(x: &MatForm, y: &MatForm) -> Result<Form> {
    if x.rows() != y.cols() || x.cols() != y.rows() {
        return Err(Error::Shape("trace of a non-square product".into()));
    }
    let mut out = Form::zero(x.universe());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let a = x.get(i, j);
            let b = y.get(j, i);
            if !a.is_zero() && !b.is_zero() {
                out.wedge_acc(a, b);
            }
        }
    }
    Ok(out)
}

/// Multiplies two matrix polynomials in `t`.
fn poly_mul(a: &[MatForm], b: &[MatForm]) -> Result<Vec<MatForm>> {
    let u = a[0].universe();
    let (r, c) = (a[0].rows(), b[0].cols());
    let mut out = vec![MatForm::zero(u, r, c); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            out[i + j] = out[i + j].try_add(&x.try_mul(y)?)?;
        }
    }
    Ok(out)
}

/// `p ∫₀¹ Tr(A ∧ F(tA)^{p-1}) dt` with `F(tA) = t dA - t² A∧A`, integrated exactly.
pub fn transgression_form(a: &MatForm, p: usize) -> Result<Form> {
    if p == 0 {
        return Err(Error::Degree("transgression needs p >= 1".into()));
    }
    let ft = a.curvature_t()?;
    let u = a.universe().clone();
    let n = a.rows();
    let mut power = vec![MatForm::identity(&u, n)];
    for _ in 1..p {
        power = poly_mul(&power, &ft)?;
    }
    let mut out = Form::zero(&u);
    for (k, c) in power.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let tr = trace_of_product(a, c)?;
        // the factor t^k of A ∧ c_k integrates to 1/(k+1)
        out.add_assign(&tr.scale_q(&ratio(p as i64, k as i64 + 1)));
    }
    Ok(out)
}

pub fn transgress(a: &MatForm, p: usize) -> Result<CSClass> {
    CSClass::new(p, transgression_form(a, p)?, Modulus::Literal)
}

/// `Tr(F(A)^p)`.
pub fn chern_weil(a: &MatForm, p: usize) -> Result<Form> {
    let f = a.curvature()?;
    let mut acc = f.clone();
    for _ in 1..p {
        acc = acc.try_mul(&f)?;
    }
    acc.trace()
}

/// `d TP(A) - Tr(F(A)^p)`; zero for every `A`.
pub fn transgression_defect(a: &MatForm, p: usize) -> Result<Form> {
    transgression_form(a, p)?.d().try_sub(&chern_weil(a, p)?)
}

/// Product of odd classes compatible with `d`: `x ⋆ y = x ∧ dy`.
fn star(x: &Form, y: &Form) -> Form {
    x.wedge(&y.d())
}

fn class_by_degree(classes: &[CSClass], k: usize) -> Result<&CSClass> {
    classes.iter().find(|c| c.degree == k).ok_or(Error::MissingClass(k))
}

/// Elementary-symmetric class `w_n` from power-sum classes of degrees `1..=n`, via
/// `p_k = Σ_{i<k} (-1)^{i-1} e_i ⋆ p_{k-i} + (-1)^{k-1} k e_k`.
pub fn chern_from_newton(nw: &[CSClass], n: usize) -> Result<CSClass> {
    if n == 0 {
        return Err(Error::Degree("class degree must be >= 1".into()));
    }
    let mut e: Vec<Form> = Vec::with_capacity(n);
    for k in 1..=n {
        let pk = &class_by_degree(nw, k)?.form;
        let mut rest = pk.clone();
        for i in 1..k {
            let pki = &class_by_degree(nw, k - i)?.form;
            let t = star(&e[i - 1], pki);
            if i % 2 == 1 {
                rest.sub_assign(&t);
            } else {
                rest.add_assign(&t);
            }
        }
        let sign = if k % 2 == 1 { 1 } else { -1 };
        e.push(rest.scale_q(&ratio(sign, k as i64)));
    }
    let modulus = if n == 1 { Modulus::ModDlogUnits } else { Modulus::ModExact };
    CSClass::new(n, e.pop().expect("n >= 1"), modulus)
}

/// Power-sum classes of degrees `1..=n` from elementary-symmetric classes.
pub fn newton_from_chern(w: &[CSClass], n: usize) -> Result<Vec<CSClass>> {
    let mut p: Vec<Form> = Vec::with_capacity(n);
    for k in 1..=n {
        let ek = &class_by_degree(w, k)?.form;
        let sign = if k % 2 == 1 { 1 } else { -1 };
        let mut acc = ek.scale_int(sign * k as i64);
        for i in 1..k {
            let ei = &class_by_degree(w, i)?.form;
            let t = star(ei, &p[k - i - 1]);
            if i % 2 == 1 {
                acc.add_assign(&t);
            } else {
                acc.sub_assign(&t);
            }
        }
        p.push(acc);
    }
    p.into_iter()
        .enumerate()
        .map(|(i, f)| CSClass::new(i + 1, f, if i == 0 { Modulus::ModDlogUnits } else { Modulus::ModExact }))
        .collect()
}

/// `TP(g A g⁻¹ + dg g⁻¹) - TP(A)`.
pub fn gauge_delta(a: &MatForm, g: &MatForm, p: usize) -> Result<Form> {
    transgression_form(&a.gauge(g)?, p)?.try_sub(&transgression_form(a, p)?)
}

/// `g = L·D·U` with `L` lower and `U` upper unitriangular, `D` diagonal;
/// `None` if a leading principal minor vanishes. Entries must be 0-forms.
pub fn ldu(g: &MatForm) -> Result<Option<(MatForm, MatForm, MatForm)>> {
    let n = g.rows();
    let u = g.universe();
    if !g.is_square() || !g.is_homogeneous_of(0) {
        return Err(Error::Shape("LDU needs a square matrix of 0-forms".into()));
    }
    let mut up: Vec<Vec<RatFun>> = (0..n).map(|i| (0..n).map(|j| g.get(i, j).scalar_part()).collect()).collect();
    let mut low: Vec<Vec<RatFun>> =
        (0..n).map(|i| (0..n).map(|j| RatFun::from_int(u.vars(), (i == j) as i64)).collect()).collect();
    for k in 0..n {
        if up[k][k].is_zero() {
            return Ok(None);
        }
        for i in k + 1..n {
            let f = up[i][k].try_div(&up[k][k])?;
            for j in k..n {
                up[i][j] = &up[i][j] - &(&f * &up[k][j]);
            }
            low[i][k] = f;
        }
    }
    let zero = RatFun::zero(u.vars());
    let diag: Vec<Vec<RatFun>> = (0..n).map(|i| (0..n).map(|j| if i == j { up[i][i].clone() } else { zero.clone() }).collect()).collect();
    for (i, row) in up.iter_mut().enumerate() {
        let p = row[i].inverse()?;
        for x in row.iter_mut() {
            *x = &*x * &p;
        }
    }
    Ok(Some((MatForm::from_scalars(u, &low)?, MatForm::from_scalars(u, &diag)?, MatForm::from_scalars(u, &up)?)))
}

/// A 2-form `η` with `TP₂(g A g⁻¹ + dg g⁻¹) - TP₂(A) = dη`, when `g` has an
/// LDU factorization. Each factor changes `TP₂` by `-d Tr(ω ∧ hXh⁻¹)` with
/// `ω = dh h⁻¹`, since `Tr(ω³)` vanishes for triangular and diagonal `h`.
pub fn second_gauge_primitive(a: &MatForm, g: &MatForm) -> Result<Option<Form>> {
    let Some((l, d, up)) = ldu(g)? else { return Ok(None) };
    let mut x = a.clone();
    let mut eta = Form::zero(a.universe());
    for h in [up, d, l] {
        let hi = h.inverse()?;
        let omega = h.d().try_mul(&hi)?;
        let moved = h.try_mul(&x)?.try_mul(&hi)?;
        eta.sub_assign(&omega.try_mul(&moved)?.trace()?);
        x = moved.try_add(&omega)?;
    }
    Ok(Some(eta))
}

/// Generator mask of the differentials of the given variables.
pub fn base_mask(universe: &Arc<GenUniverse>, vars: &[usize]) -> Mask {
    vars.iter().filter(|&&v| v < universe.nvars()).fold(0, |m, &v| m | (1 << v))
}

/// True if every term has at least two generators from `base`, i.e. the form lies
/// in the ideal generated by base 2-forms.
pub fn in_base_ideal(form: &Form, base: Mask) -> bool {
    form.terms().all(|(m, _)| (m & base).count_ones() >= 2)
}

/// First term outside the base ideal, if any.
pub fn base_ideal_witness(form: &Form, base: Mask) -> Option<Form> {
    form.terms()
        .find(|(m, _)| (m & base).count_ones() < 2)
        .map(|(m, c)| Form::term(form.universe(), m, c.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratfun::VarUniverse;

    fn setup() -> (Arc<GenUniverse>, impl Fn(&str) -> RatFun) {
        let vars = VarUniverse::parameters(&["u", "v", "s", "w"]).unwrap();
        let g = GenUniverse::new(vars.clone(), 0).unwrap();
        (g, move |t: &str| RatFun::parse(&vars, t).unwrap())
    }

    fn one_by_one(u: &Arc<GenUniverse>, f: Form) -> MatForm {
        MatForm::from_fn(u, 1, 1, |_, _| f.clone())
    }

    #[test]
    fn p1_is_trace() {
        let (u, p) = setup();
        let a = MatForm::from_fn(&u, 2, 2, |i, j| Form::scalar(&u, p(&format!("u^{i}*v+{j}"))).wedge(&Form::dvar(&u, i + j)));
        assert_eq!(transgression_form(&a, 1).unwrap(), a.trace().unwrap());
    }

    #[test]
    fn abelian_p2_is_a_da() {
        let (u, p) = setup();
        let a = &Form::scalar(&u, p("u")).wedge(&Form::dvar(&u, 1)) + &Form::scalar(&u, p("s")).wedge(&Form::dvar(&u, 3));
        let tp = transgression_form(&one_by_one(&u, a.clone()), 2).unwrap();
        assert_eq!(tp, a.wedge(&a.d()));
        let (du, dv, ds, dw) = (Form::dvar(&u, 0), Form::dvar(&u, 1), Form::dvar(&u, 2), Form::dvar(&u, 3));
        let expected = &Form::scalar(&u, p("u")).wedge(&dv).wedge(&ds).wedge(&dw)
            + &Form::scalar(&u, p("s")).wedge(&dw).wedge(&du).wedge(&dv);
        assert_eq!(tp, expected);
        let b = Form::scalar(&u, p("u")).wedge(&dv);
        assert!(transgression_form(&one_by_one(&u, b), 2).unwrap().is_zero());
    }

    #[test]
    fn newton_chern_low_degree() {
        let (u, p) = setup();
        let a = Form::scalar(&u, p("u*w")).wedge(&Form::dvar(&u, 1));
        let m = one_by_one(&u, a);
        let nw: Vec<CSClass> = (1..=2).map(|k| transgress(&m, k).unwrap()).collect();
        assert_eq!(chern_from_newton(&nw, 1).unwrap().form, nw[0].form);
        assert!(chern_from_newton(&nw, 2).unwrap().form.is_zero());
        assert_eq!(chern_from_newton(&nw[1..], 2), Err(Error::MissingClass(1)));
    }

    #[test]
    fn gauge_delta_p1_is_dlog_det() {
        let (u, p) = setup();
        let a = MatForm::from_fn(&u, 2, 2, |i, j| Form::scalar(&u, p(&format!("s^{i}+{j}*u"))).wedge(&Form::dvar(&u, 1 + i)));
        let g = MatForm::from_scalars(&u, &[vec![p("u"), p("1")], vec![p("v"), p("w")]]).unwrap();
        let delta = gauge_delta(&a, &g, 1).unwrap();
        assert_eq!(delta, Form::dlog(&u, &g.det().unwrap()).unwrap());
        assert!(gauge_delta(&a, &MatForm::identity(&u, 2), 2).unwrap().is_zero());
    }

    #[test]
    fn second_degree_gauge_change_is_exact() {
        let (u, p) = setup();
        let a = MatForm::from_fn(&u, 2, 2, |i, j| Form::scalar(&u, p(&format!("s^{i}+{j}*u - w"))).wedge(&Form::dvar(&u, (i + 2 * j) % 4)));
        let g = MatForm::from_scalars(&u, &[vec![p("u + 1"), p("s")], vec![p("v*w"), p("w - 2")]]).unwrap();
        let (l, d, up) = ldu(&g).unwrap().unwrap();
        assert_eq!(l.try_mul(&d).unwrap().try_mul(&up).unwrap(), g);
        let eta = second_gauge_primitive(&a, &g).unwrap().unwrap();
        assert_eq!(gauge_delta(&a, &g, 2).unwrap(), eta.d());
        let swap = MatForm::from_scalars(&u, &[vec![p("0"), p("1")], vec![p("1"), p("0")]]).unwrap();
        assert!(second_gauge_primitive(&a, &swap).unwrap().is_none());
    }
}
