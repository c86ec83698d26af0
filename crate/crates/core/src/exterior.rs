//! Exterior algebra over a rational function field.
//!
//! Generators are `d(x)` for every variable `x` of the coefficient universe,
//! in universe order, followed by formal closed 1-forms `rho1, rho2, ...`.
//! A term is a bitmask of generators read in increasing index order, so
//! every `rho` sits to the right of every variable differential.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ratfun::{same_universe, Coeff, RatFun, VarUniverse};

pub type Mask = u64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GenUniverse {
    vars: Arc<VarUniverse>,
    nrho: usize,
}

impl GenUniverse {
    pub fn new(vars: Arc<VarUniverse>, nrho: usize) -> Result<Arc<Self>> {
        if vars.len() + nrho > 64 {
            return Err(Error::InvalidUniverse("more than 64 generators".into()));
        }
        Ok(Arc::new(GenUniverse { vars, nrho }))
    }

    pub fn vars(&self) -> &Arc<VarUniverse> {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn nrho(&self) -> usize {
        self.nrho
    }

    pub fn len(&self) -> usize {
        self.vars.len() + self.nrho
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Generator index of `rho_k`, `k` counted from 1.
    pub fn rho_index(&self, k: usize) -> usize {
        assert!(k >= 1 && k <= self.nrho, "rho index out of range");
        self.vars.len() + k - 1
    }

    pub fn rho_mask(&self) -> Mask {
        let all = if self.len() == 64 { !0 } else { (1u64 << self.len()) - 1 };
        all & !((1u64 << self.vars.len()) - 1)
    }

    pub fn gen_name(&self, g: usize) -> String {
        if g < self.vars.len() {
            format!("d{}", self.vars.name(g))
        } else {
            format!("rho{}", g - self.vars.len() + 1)
        }
    }

    pub fn gen_by_name(&self, name: &str) -> Option<usize> {
        if let Some(k) = name.strip_prefix("rho") {
            if let Ok(k) = k.parse::<usize>() {
                if k >= 1 && k <= self.nrho && self.vars.index_of(name).is_none() {
                    return Some(self.rho_index(k));
                }
            }
        }
        name.strip_prefix('d').and_then(|v| self.vars.index_of(v))
    }
}

/// Sign of `g_a ∧ g_b` relative to the sorted product of the two masks.
pub fn wedge_sign(a: Mask, b: Mask) -> bool {
    // count pairs (i in a, j in b) with i > j
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        inversions += (a >> j >> 1).count_ones();
    }
    inversions % 2 == 1
}

#[derive(Clone)]
pub struct Form {
    universe: Arc<GenUniverse>,
    terms: BTreeMap<Mask, RatFun>,
}

impl PartialEq for Form {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && same_universe(&self.universe, &other.universe)
    }
}

impl Eq for Form {}

impl Form {
    pub fn zero(universe: &Arc<GenUniverse>) -> Self {
        Form { universe: universe.clone(), terms: BTreeMap::new() }
    }

    pub fn scalar(universe: &Arc<GenUniverse>, f: RatFun) -> Self {
        let mut out = Self::zero(universe);
        if !f.is_zero() {
            out.terms.insert(0, f);
        }
        out
    }

    pub fn one(universe: &Arc<GenUniverse>) -> Self {
        Self::scalar(universe, RatFun::one(universe.vars()))
    }

    pub fn from_int(universe: &Arc<GenUniverse>, c: i64) -> Self {
        Self::scalar(universe, RatFun::from_int(universe.vars(), c))
    }

    /// `coeff * g_mask`, mask read in increasing generator order.
    pub fn term(universe: &Arc<GenUniverse>, mask: Mask, coeff: RatFun) -> Self {
        let mut out = Self::zero(universe);
        if !coeff.is_zero() {
            out.terms.insert(mask, coeff);
        }
        out
    }

    pub fn generator(universe: &Arc<GenUniverse>, g: usize) -> Self {
        assert!(g < universe.len(), "generator out of range");
        Self::term(universe, 1 << g, RatFun::one(universe.vars()))
    }

    /// `d(x)` for the variable `x` with the given index.
    pub fn dvar(universe: &Arc<GenUniverse>, var: usize) -> Self {
        Self::generator(universe, var)
    }

    pub fn rho(universe: &Arc<GenUniverse>, k: usize) -> Self {
        Self::generator(universe, universe.rho_index(k))
    }

    pub fn universe(&self) -> &Arc<GenUniverse> {
        &self.universe
    }

    pub fn terms(&self) -> impl Iterator<Item = (Mask, &RatFun)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, mask: Mask) -> Option<&RatFun> {
        self.terms.get(&mask)
    }

    /// The 0-form part.
    pub fn scalar_part(&self) -> RatFun {
        self.terms.get(&0).cloned().unwrap_or_else(|| RatFun::zero(self.universe.vars()))
    }

    pub fn degrees(&self) -> impl Iterator<Item = u32> + '_ {
        self.terms.keys().map(|m| m.count_ones())
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.degrees().max()
    }

    /// Degree if every term has the same degree; zero forms report `None`.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut it = self.degrees();
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    pub fn is_homogeneous_of(&self, p: u32) -> bool {
        self.degrees().all(|e| e == p)
    }

    pub fn degree_part(&self, p: u32) -> Form {
        Form {
            universe: self.universe.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.count_ones() == p)
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    fn check(&self, other: &Form) -> Result<()> {
        if same_universe(&self.universe, &other.universe) {
            Ok(())
        } else {
            Err(Error::UniverseMismatch)
        }
    }

    fn add_term(&mut self, mask: Mask, c: RatFun) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mask) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = e.get().try_add(&c).expect("shared universe");
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn try_add(&self, other: &Form) -> Result<Form> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Form) -> Result<Form> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.neg());
        }
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Form) {
        self.check(other).expect("forms share a universe");
        for (m, c) in &other.terms {
            self.add_term(*m, c.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &Form) {
        self.check(other).expect("forms share a universe");
        for (m, c) in &other.terms {
            self.add_term(*m, c.neg());
        }
    }

    pub fn neg(&self) -> Form {
        Form {
            universe: self.universe.clone(),
            terms: self.terms.iter().map(|(m, c)| (*m, c.neg())).collect(),
        }
    }

    pub fn scale(&self, f: &RatFun) -> Form {
        if f.is_zero() {
            return Form::zero(&self.universe);
        }
        if f.is_one() {
            return self.clone();
        }
        Form {
            universe: self.universe.clone(),
            terms: self.terms.iter().map(|(m, c)| (*m, c * f)).collect(),
        }
    }

    pub fn scale_q(&self, q: &Coeff) -> Form {
        self.scale(&RatFun::constant(self.universe.vars(), q.clone()))
    }

    pub fn scale_int(&self, k: i64) -> Form {
        self.scale(&RatFun::from_int(self.universe.vars(), k))
    }

    pub fn try_wedge(&self, other: &Form) -> Result<Form> {
        self.check(other)?;
        let mut out = Form::zero(&self.universe);
        out.wedge_acc(self, other);
        Ok(out)
    }

    /// `self += a ∧ b`.
    pub fn wedge_acc(&mut self, a: &Form, b: &Form) {
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                if ma & mb != 0 {
                    continue;
                }
                let c = ca * cb;
                let c = if wedge_sign(*ma, *mb) { c.neg() } else { c };
                self.add_term(ma | mb, c);
            }
        }
    }

    pub fn wedge(&self, other: &Form) -> Form {
        self.try_wedge(other).expect("forms share a universe")
    }

    /// Exterior derivative; `rho` generators are closed and coefficients never depend on them.
    pub fn d(&self) -> Form {
        let mut out = Form::zero(&self.universe);
        let nvars = self.universe.nvars();
        for (m, c) in &self.terms {
            let vm = c.var_mask();
            for v in 0..nvars {
                if vm & (1 << v) == 0 || m & (1 << v) != 0 {
                    continue;
                }
                let dc = c.derivative_unchecked(v);
                let below = (m & ((1u64 << v) - 1)).count_ones();
                let dc = if below % 2 == 1 { dc.neg() } else { dc };
                out.add_term(m | (1 << v), dc);
            }
        }
        out
    }

    /// `df / f`.
    pub fn dlog(universe: &Arc<GenUniverse>, f: &RatFun) -> Result<Form> {
        if f.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let inv = f.inverse()?;
        let mut out = Form::zero(universe);
        for v in 0..universe.nvars() {
            if f.depends_on(v) {
                out.add_term(1 << v, &f.derivative_unchecked(v) * &inv);
            }
        }
        Ok(out)
    }

    /// `eta` with `self = Σ_J eta_J ∧ rho_J`, for the given set of rho indices (1-based).
    pub fn rho_extract(&self, j: &[usize]) -> Form {
        let u = &self.universe;
        let target: Mask = j.iter().map(|&k| 1u64 << u.rho_index(k)).fold(0, |a, b| a | b);
        let rho = u.rho_mask();
        Form {
            universe: u.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| *m & rho == target)
                .map(|(m, c)| (m & !rho, c.clone()))
                .collect(),
        }
    }

    pub fn has_rho(&self) -> bool {
        let rho = self.universe.rho_mask();
        self.terms.keys().any(|m| m & rho != 0)
    }

    /// Algebra map sending coefficient `c` to `coeff(c)` and generator `g` to `images[g]`.
    /// The images must be 1-forms over `target` for the map to respect signs.
    pub fn map_generators<F>(&self, target: &Arc<GenUniverse>, coeff: F, images: &[Form]) -> Result<Form>
    where
        F: Fn(&RatFun) -> Result<RatFun>,
    {
        assert_eq!(images.len(), self.universe.len(), "one image per generator");
        let mut out = Form::zero(target);
        for (m, c) in &self.terms {
            let mut acc = Form::scalar(target, coeff(c)?);
            let mut rest = *m;
            while rest != 0 && !acc.is_zero() {
                let g = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                acc = acc.try_wedge(&images[g])?;
            }
            out.add_assign(&acc);
        }
        Ok(out)
    }

    /// Pullback along the section `var = value`: coefficients get `var ↦ value`
    /// and `d(var) ↦ d(value)`. `value` must not involve `var`.
    pub fn pullback_section(&self, var: usize, value: &RatFun) -> Result<Form> {
        if self.has_rho() {
            return Err(Error::InvalidConnection("pullback of a form with formal generators".into()));
        }
        if value.depends_on(var) {
            return Err(Error::InvalidConnection("section value depends on the fiber variable".into()));
        }
        let u = self.universe.clone();
        let images: Vec<Form> = (0..u.len())
            .map(|g| {
                if g == var {
                    Form::scalar(&u, value.clone()).d()
                } else {
                    Form::generator(&u, g)
                }
            })
            .collect();
        self.map_generators(&u, |c| c.substitute(var, value), &images)
    }

    /// Substitutes a value for a variable in every coefficient, leaving generators alone.
    pub fn substitute_coeffs(&self, var: usize, value: &RatFun) -> Result<Form> {
        let mut out = Form::zero(&self.universe);
        for (m, c) in &self.terms {
            out.add_term(*m, c.substitute(var, value)?);
        }
        Ok(out)
    }

    /// Same terms over another generator universe with the same variables;
    /// fails if a term uses a generator the target lacks.
    pub fn retarget(&self, target: &Arc<GenUniverse>) -> Result<Form> {
        if !same_universe(self.universe.vars(), target.vars()) {
            return Err(Error::UniverseMismatch);
        }
        let allowed = if target.len() == 64 { !0 } else { (1u64 << target.len()) - 1 };
        if self.terms.keys().any(|m| m & !allowed != 0) {
            return Err(Error::InvalidUniverse("form uses generators absent from the target".into()));
        }
        Ok(Form { universe: target.clone(), terms: self.terms.clone() })
    }

    pub fn eval_numeric(&self, point: &[Complex64], floor: f64) -> Result<NumForm> {
        let mut out = NumForm::default();
        for (m, c) in &self.terms {
            out.add_term(*m, c.eval_numeric(point, floor)?);
        }
        Ok(out)
    }

    /// Numeric value with generators replaced by numeric 1-forms, e.g. a pulled-back `dz`.
    pub fn eval_numeric_mapped(&self, point: &[Complex64], floor: f64, images: &[NumForm]) -> Result<NumForm> {
        let mut out = NumForm::default();
        for (m, c) in &self.terms {
            let mut acc = NumForm::scalar(c.eval_numeric(point, floor)?);
            let mut rest = *m;
            while rest != 0 {
                let g = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                acc = acc.wedge(&images[g]);
            }
            out.add_assign(&acc);
        }
        Ok(out)
    }

    /// `(coefficient string, generator names)` pairs.
    pub fn to_named_terms(&self) -> Vec<(String, Vec<String>)> {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut gens = Vec::new();
                let mut rest = *m;
                while rest != 0 {
                    let g = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    gens.push(self.universe.gen_name(g));
                }
                (c.to_string(), gens)
            })
            .collect()
    }

    pub fn from_named_terms<S: AsRef<str>>(universe: &Arc<GenUniverse>, terms: &[(S, Vec<S>)]) -> Result<Form> {
        let mut out = Form::zero(universe);
        for (coeff, gens) in terms {
            let c = RatFun::parse(universe.vars(), coeff.as_ref())?;
            let mut acc = Form::scalar(universe, c);
            for g in gens {
                let i = universe
                    .gen_by_name(g.as_ref())
                    .ok_or_else(|| Error::UnknownVariable(g.as_ref().to_string()))?;
                acc = acc.wedge(&Form::generator(universe, i));
            }
            out.add_assign(&acc);
        }
        Ok(out)
    }
}

macro_rules! form_binop {
    ($trait:ident, $method:ident, $imp:ident) => {
        impl std::ops::$trait<&Form> for &Form {
            type Output = Form;
            fn $method(self, rhs: &Form) -> Form {
                self.$imp(rhs).expect("forms share a universe")
            }
        }
    };
}

form_binop!(Add, add, try_add);
form_binop!(Sub, sub, try_sub);

impl std::ops::Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        Form::neg(self)
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .to_named_terms()
            .into_iter()
            .map(|(c, g)| if g.is_empty() { format!("({c})") } else { format!("({c}) {}", g.join("^")) })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form[{self}]")
    }
}

/// Numeric antisymmetric tensor: complex coefficients on generator masks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NumForm {
    pub terms: BTreeMap<Mask, Complex64>,
}

impl NumForm {
    pub fn scalar(c: Complex64) -> Self {
        let mut out = NumForm::default();
        out.add_term(0, c);
        out
    }

    pub fn generator(g: usize) -> Self {
        let mut out = NumForm::default();
        out.add_term(1 << g, Complex64::new(1.0, 0.0));
        out
    }

    pub fn add_term(&mut self, mask: Mask, c: Complex64) {
        *self.terms.entry(mask).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    pub fn add_assign(&mut self, other: &NumForm) {
        for (m, c) in &other.terms {
            self.add_term(*m, *c);
        }
    }

    pub fn sub_assign(&mut self, other: &NumForm) {
        for (m, c) in &other.terms {
            self.add_term(*m, -*c);
        }
    }

    pub fn scale(&self, s: Complex64) -> NumForm {
        NumForm { terms: self.terms.iter().map(|(m, c)| (*m, c * s)).collect() }
    }

    pub fn wedge(&self, other: &NumForm) -> NumForm {
        let mut out = NumForm::default();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if ma & mb != 0 {
                    continue;
                }
                let c = ca * cb;
                out.add_term(ma | mb, if wedge_sign(*ma, *mb) { -c } else { c });
            }
        }
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &NumForm) -> f64 {
        let mut diff = self.clone();
        diff.sub_assign(other);
        diff.max_norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Arc<GenUniverse>, impl Fn(&str) -> RatFun) {
        let vars = VarUniverse::parameters(&["x", "y", "z"]).unwrap();
        let g = GenUniverse::new(vars.clone(), 2).unwrap();
        (g, move |s: &str| RatFun::parse(&vars, s).unwrap())
    }

    #[test]
    fn wedge_examples() {
        let (u, _) = setup();
        let dx = Form::dvar(&u, 0);
        let dy = Form::dvar(&u, 1);
        let w = dx.wedge(&dy);
        assert_eq!(w.coeff(0b11).map(|c| c.is_one()), Some(true));
        assert!(dx.wedge(&dx).is_zero());
        assert_eq!(dy.wedge(&dx), w.neg());
    }

    #[test]
    fn d_examples() {
        let (u, p) = setup();
        let x_dy = Form::scalar(&u, p("x")).wedge(&Form::dvar(&u, 1));
        assert_eq!(x_dy.d(), Form::dvar(&u, 0).wedge(&Form::dvar(&u, 1)));
        let w = Form::dlog(&u, &p("x*(x-y)")).unwrap();
        assert!(w.d().is_zero());
        let r = Form::scalar(&u, p("x")).wedge(&Form::rho(&u, 1));
        assert_eq!(r.d(), Form::dvar(&u, 0).wedge(&Form::rho(&u, 1)));
    }

    #[test]
    fn dlog_examples() {
        let (u, p) = setup();
        let a = Form::dlog(&u, &p("(z-x)*(z-y)")).unwrap();
        let b = &Form::dlog(&u, &p("z-x")).unwrap() + &Form::dlog(&u, &p("z-y")).unwrap();
        assert_eq!(a, b);
        assert!(Form::dlog(&u, &p("5")).unwrap().is_zero());
        assert_eq!(Form::dlog(&u, &p("-x*y")).unwrap(), Form::dlog(&u, &p("x*y")).unwrap());
        assert!(Form::dlog(&u, &p("0")).is_err());
    }

    #[test]
    fn rho_extract_round_trip() {
        let (u, p) = setup();
        let dx = Form::dvar(&u, 0);
        let a = Form::scalar(&u, p("3*x")).wedge(&dx).wedge(&Form::rho(&u, 1));
        let b = Form::scalar(&u, p("y")).wedge(&Form::dvar(&u, 2)).wedge(&Form::rho(&u, 2));
        let c = Form::scalar(&u, p("z")).wedge(&Form::rho(&u, 1)).wedge(&Form::rho(&u, 2));
        let alpha = &(&a + &b) + &(&c + &dx);
        assert_eq!(alpha.rho_extract(&[1]), Form::scalar(&u, p("3*x")).wedge(&dx));
        assert_eq!(alpha.rho_extract(&[]), dx);
        let mut back = Form::zero(&u);
        for j in [vec![], vec![1], vec![2], vec![1, 2]] {
            let mut rj = Form::one(&u);
            for &k in &j {
                rj = rj.wedge(&Form::rho(&u, k));
            }
            back.add_assign(&alpha.rho_extract(&j).wedge(&rj));
        }
        assert_eq!(back, alpha);
    }

    #[test]
    fn pullback_examples() {
        let vars = VarUniverse::new(vec![
            crate::ratfun::Variable { name: "a1".into(), kind: crate::ratfun::VarKind::BasePoint },
            crate::ratfun::Variable { name: "z".into(), kind: crate::ratfun::VarKind::Fiber },
        ])
        .unwrap();
        let u = GenUniverse::new(vars.clone(), 0).unwrap();
        let p = |s: &str| RatFun::parse(&vars, s).unwrap();
        let w = Form::dlog(&u, &p("z-a1")).unwrap();
        assert_eq!(w.pullback_section(1, &p("2*a1")).unwrap(), Form::dlog(&u, &p("a1")).unwrap());
        assert!(Form::dvar(&u, 1).pullback_section(1, &p("0")).unwrap().is_zero());
        let f = Form::scalar(&u, p("a1^2")).wedge(&Form::dvar(&u, 0));
        assert_eq!(f.pullback_section(1, &p("a1+7")).unwrap(), f);
    }

    #[test]
    fn numeric_examples() {
        let (u, p) = setup();
        let c = |re: f64| Complex64::new(re, 0.0);
        let pt = [c(3.0), c(1.0), c(0.5)];
        let w = Form::dlog(&u, &p("x-y")).unwrap().eval_numeric(&pt, 1e-12).unwrap();
        assert!((w.terms[&1] - c(0.5)).norm() < 1e-15);
        assert!((w.terms[&2] - c(-0.5)).norm() < 1e-15);
        assert_eq!(Form::zero(&u).eval_numeric(&pt, 1e-12).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn degree_part_examples() {
        let (u, p) = setup();
        let a = &Form::scalar(&u, p("x")) + &Form::scalar(&u, p("y")).wedge(&Form::dvar(&u, 0));
        assert_eq!(a.degree_part(1), Form::scalar(&u, p("y")).wedge(&Form::dvar(&u, 0)));
        assert!(a.degree_part(9).is_zero());
        assert_eq!(&a.degree_part(0) + &a.degree_part(1), a);
    }

    #[test]
    fn named_terms_round_trip() {
        let (u, p) = setup();
        let a = &Form::scalar(&u, p("x/(y-z)")).wedge(&Form::dvar(&u, 2)).wedge(&Form::rho(&u, 2))
            + &Form::scalar(&u, p("7"));
        let t = a.to_named_terms();
        assert_eq!(Form::from_named_terms(&u, &t).unwrap(), a);
    }
}
