//! Exact arithmetic in Q(x_1, ..., x_m).
//!
//! A [`RatFun`] is always stored in canonical form: numerator and denominator
//! coprime, denominator with coprime integer coefficients and a positive
//! leading coefficient under graded-lex order. Equality is therefore
//! structural equality.

pub mod expr;
pub mod gcd;
pub mod poly;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
pub use gcd::gcd;
pub use poly::{coeff_to_f64, Coeff, Monomial, Poly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    /// Position `a_ν` of a marked point.
    BasePoint,
    /// Affine coordinate `z` of the projective line.
    Fiber,
    /// Auxiliary transcendental of the base field.
    Parameter,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

/// Ordered, immutable set of variable names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarUniverse {
    vars: Vec<Variable>,
}

pub const MAX_VARS: usize = 48;

impl VarUniverse {
    pub fn new(vars: Vec<Variable>) -> Result<Arc<Self>> {
        if vars.len() > MAX_VARS {
            return Err(Error::InvalidUniverse(format!("at most {MAX_VARS} variables")));
        }
        for (i, v) in vars.iter().enumerate() {
            if !expr::is_identifier(&v.name) {
                return Err(Error::InvalidUniverse(format!("`{}` is not an identifier", v.name)));
            }
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::InvalidUniverse(format!("duplicate variable `{}`", v.name)));
            }
        }
        if vars.iter().filter(|v| v.kind == VarKind::Fiber).count() > 1 {
            return Err(Error::InvalidUniverse("more than one fiber variable".into()));
        }
        Ok(Arc::new(VarUniverse { vars }))
    }

    /// Universe of parameters with the given names.
    pub fn parameters(names: &[&str]) -> Result<Arc<Self>> {
        Self::new(
            names
                .iter()
                .map(|n| Variable { name: n.to_string(), kind: VarKind::Parameter })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn name(&self, i: usize) -> &str {
        &self.vars[i].name
    }

    pub fn kind(&self, i: usize) -> VarKind {
        self.vars[i].kind
    }

    pub fn fiber(&self) -> Option<usize> {
        self.vars.iter().position(|v| v.kind == VarKind::Fiber)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }
}

pub(crate) fn same_universe<T: PartialEq>(a: &Arc<T>, b: &Arc<T>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

#[derive(Clone)]
pub struct RatFun {
    universe: Arc<VarUniverse>,
    num: Poly,
    den: Poly,
}

impl PartialEq for RatFun {
    fn eq(&self, other: &Self) -> bool {
        self.num == other.num && self.den == other.den && same_universe(&self.universe, &other.universe)
    }
}

impl Eq for RatFun {}

impl std::hash::Hash for RatFun {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.num.hash(state);
        self.den.hash(state);
    }
}

impl RatFun {
    pub fn zero(universe: &Arc<VarUniverse>) -> Self {
        let n = universe.len();
        RatFun { universe: universe.clone(), num: Poly::zero(n), den: Poly::one(n) }
    }

    pub fn one(universe: &Arc<VarUniverse>) -> Self {
        Self::constant(universe, Coeff::one())
    }

    pub fn constant(universe: &Arc<VarUniverse>, c: Coeff) -> Self {
        let n = universe.len();
        RatFun { universe: universe.clone(), num: Poly::constant(n, c), den: Poly::one(n) }
    }

    pub fn from_int(universe: &Arc<VarUniverse>, c: i64) -> Self {
        Self::constant(universe, Coeff::from_integer(BigInt::from(c)))
    }

    pub fn from_ratio(universe: &Arc<VarUniverse>, n: i64, d: i64) -> Self {
        Self::constant(universe, Coeff::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn var(universe: &Arc<VarUniverse>, index: usize) -> Self {
        let n = universe.len();
        RatFun { universe: universe.clone(), num: Poly::var(n, index), den: Poly::one(n) }
    }

    pub fn var_named(universe: &Arc<VarUniverse>, name: &str) -> Result<Self> {
        let i = universe.index_of(name).ok_or_else(|| Error::UnknownVariable(name.into()))?;
        Ok(Self::var(universe, i))
    }

    pub fn from_poly(universe: &Arc<VarUniverse>, p: Poly) -> Self {
        assert_eq!(p.nvars(), universe.len(), "exponent vectors must match the universe");
        let n = universe.len();
        RatFun { universe: universe.clone(), num: p, den: Poly::one(n) }
    }

    /// Canonical form of `num / den`.
    pub fn from_fraction(universe: &Arc<VarUniverse>, num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::canonical(universe.clone(), num, den))
    }

    fn canonical(universe: Arc<VarUniverse>, num: Poly, den: Poly) -> Self {
        let n = universe.len();
        if num.is_zero() {
            return RatFun { universe, num: Poly::zero(n), den: Poly::one(n) };
        }
        let (num, den) = if den.is_constant() {
            (num, den)
        } else {
            let g = gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
            }
        };
        Self::normalize_den(universe, num, den)
    }

    /// Rescales so the denominator is primitive with positive leading coefficient.
    fn normalize_den(universe: Arc<VarUniverse>, num: Poly, den: Poly) -> Self {
        let (scale, den) = den.primitive_split();
        let num = if scale.is_one() { num } else { num.scale(&scale.recip()) };
        RatFun { universe, num, den }
    }

    pub fn universe(&self) -> &Arc<VarUniverse> {
        &self.universe
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn constant_value(&self) -> Option<Coeff> {
        if self.is_constant() {
            self.num.constant_value()
        } else {
            None
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.num.depends_on(var) || self.den.depends_on(var)
    }

    pub fn var_mask(&self) -> u64 {
        self.num.var_mask() | self.den.var_mask()
    }

    fn check(&self, other: &RatFun) -> Result<()> {
        if same_universe(&self.universe, &other.universe) {
            Ok(())
        } else {
            Err(Error::UniverseMismatch)
        }
    }

    pub fn try_add(&self, other: &RatFun) -> Result<RatFun> {
        self.check(other)?;
        Ok(self.add_unchecked(other, false))
    }

    pub fn try_sub(&self, other: &RatFun) -> Result<RatFun> {
        self.check(other)?;
        Ok(self.add_unchecked(other, true))
    }

    pub fn try_mul(&self, other: &RatFun) -> Result<RatFun> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn try_div(&self, other: &RatFun) -> Result<RatFun> {
        self.check(other)?;
        Ok(self.mul_unchecked(&other.inverse()?))
    }

    fn add_unchecked(&self, other: &RatFun, negate: bool) -> RatFun {
        let u = self.universe.clone();
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return if negate { other.neg() } else { other.clone() };
        }
        let combine = |a: &Poly, b: &Poly| if negate { a.sub(b) } else { a.add(b) };
        if self.den == other.den {
            let num = combine(&self.num, &other.num);
            return Self::canonical(u, num, self.den.clone());
        }
        if self.den.is_one() || other.den.is_one() {
            // gcd(num_i, den_i) = 1 already forces a reduced result.
            let num = combine(&self.num.mul(&other.den), &other.num.mul(&self.den));
            let den = self.den.mul(&other.den);
            return RatFun { universe: u, num, den };
        }
        let g = gcd(&self.den, &other.den);
        if g.is_one() {
            let num = combine(&self.num.mul(&other.den), &other.num.mul(&self.den));
            let den = self.den.mul(&other.den);
            if num.is_zero() {
                return RatFun::zero(&u);
            }
            return RatFun { universe: u, num, den };
        }
        let d1 = self.den.div_exact(&g).expect("gcd divides");
        let d2 = other.den.div_exact(&g).expect("gcd divides");
        let num = combine(&self.num.mul(&d2), &other.num.mul(&d1));
        if num.is_zero() {
            return RatFun::zero(&u);
        }
        let h = gcd(&num, &g);
        let (num, g) = if h.is_one() {
            (num, g)
        } else {
            (num.div_exact(&h).expect("gcd divides"), g.div_exact(&h).expect("gcd divides"))
        };
        let den = g.mul(&d1).mul(&d2);
        Self::normalize_den(u, num, den)
    }

    fn mul_unchecked(&self, other: &RatFun) -> RatFun {
        let u = self.universe.clone();
        if self.is_zero() || other.is_zero() {
            return RatFun::zero(&u);
        }
        if let Some(c) = other.constant_value() {
            return self.scale(&c);
        }
        if let Some(c) = self.constant_value() {
            return other.scale(&c);
        }
        let reduce = |n: &Poly, d: &Poly| -> (Poly, Poly) {
            if d.is_one() || n.is_constant() {
                return (n.clone(), d.clone());
            }
            let g = gcd(n, d);
            if g.is_one() {
                (n.clone(), d.clone())
            } else {
                (n.div_exact(&g).expect("gcd divides"), d.div_exact(&g).expect("gcd divides"))
            }
        };
        let (n1, d2) = reduce(&self.num, &other.den);
        let (n2, d1) = reduce(&other.num, &self.den);
        Self::normalize_den(u, n1.mul(&n2), d1.mul(&d2))
    }

    pub fn scale(&self, c: &Coeff) -> RatFun {
        if c.is_zero() {
            return RatFun::zero(&self.universe);
        }
        RatFun { universe: self.universe.clone(), num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn neg(&self) -> RatFun {
        RatFun { universe: self.universe.clone(), num: self.num.neg(), den: self.den.clone() }
    }

    pub fn inverse(&self) -> Result<RatFun> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalize_den(self.universe.clone(), self.den.clone(), self.num.clone()))
    }

    /// Integer power; negative exponents require a nonzero base.
    pub fn pow(&self, e: i32) -> Result<RatFun> {
        let base = if e < 0 { self.inverse()? } else { self.clone() };
        let k = e.unsigned_abs();
        Ok(RatFun {
            universe: self.universe.clone(),
            num: base.num.pow(k),
            den: base.den.pow(k),
        }
        .renormalized())
    }

    fn renormalized(self) -> RatFun {
        Self::normalize_den(self.universe, self.num, self.den)
    }

    pub fn derivative(&self, var: usize) -> Result<RatFun> {
        if var >= self.universe.len() {
            return Err(Error::UnknownVariable(format!("#{var}")));
        }
        Ok(self.derivative_unchecked(var))
    }

    pub fn derivative_named(&self, name: &str) -> Result<RatFun> {
        let i = self.universe.index_of(name).ok_or_else(|| Error::UnknownVariable(name.into()))?;
        Ok(self.derivative_unchecked(i))
    }

    pub(crate) fn derivative_unchecked(&self, var: usize) -> RatFun {
        let u = self.universe.clone();
        if !self.depends_on(var) {
            return RatFun::zero(&u);
        }
        let dn = self.num.derivative(var);
        if self.den.is_one() || !self.den.depends_on(var) {
            return Self::canonical(u, dn, self.den.clone());
        }
        let dd = self.den.derivative(var);
        let num = dn.mul(&self.den).sub(&self.num.mul(&dd));
        Self::canonical(u, num, self.den.mul(&self.den))
    }

    /// `self` with `var` replaced by `value`.
    pub fn substitute(&self, var: usize, value: &RatFun) -> Result<RatFun> {
        self.check(value)?;
        if var >= self.universe.len() {
            return Err(Error::UnknownVariable(format!("#{var}")));
        }
        if !self.depends_on(var) {
            return Ok(self.clone());
        }
        let num = substitute_poly(&self.universe, &self.num, var, value);
        let den = substitute_poly(&self.universe, &self.den, var, value);
        if den.is_zero() {
            return Err(Error::PoleHit { var: self.universe.name(var).to_string() });
        }
        Ok(num.mul_unchecked(&den.inverse()?))
    }

    /// Numeric value; fails when the denominator is below `floor` times its term scale.
    pub fn eval_numeric(&self, point: &[Complex64], floor: f64) -> Result<Complex64> {
        if point.len() != self.universe.len() {
            return Err(Error::Shape("assignment length differs from universe".into()));
        }
        let d = self.den.eval_complex(point);
        if !self.den.is_constant() {
            let scale = self.den.eval_abs_scale(point).max(f64::MIN_POSITIVE);
            if d.norm() <= floor * scale {
                return Err(Error::NearZeroDenominator { magnitude: d.norm() });
            }
        }
        Ok(self.num.eval_complex(point) / d)
    }

    /// Parses the textual grammar against this universe.
    pub fn parse(universe: &Arc<VarUniverse>, text: &str) -> Result<RatFun> {
        expr::parse(universe, text)
    }
}

fn substitute_poly(u: &Arc<VarUniverse>, p: &Poly, var: usize, value: &RatFun) -> RatFun {
    let coeffs = p.coefficients_in(var);
    // Horner in `var`.
    let mut acc = RatFun::zero(u);
    for c in coeffs.iter().rev() {
        acc = acc.mul_unchecked(value).add_unchecked(&RatFun::from_poly(u, c.clone()), false);
    }
    acc
}

macro_rules! binop {
    ($trait:ident, $method:ident, $imp:ident) => {
        impl std::ops::$trait<&RatFun> for &RatFun {
            type Output = RatFun;
            /// Panics on universe mismatch; use the `try_` variant to recover.
            fn $method(self, rhs: &RatFun) -> RatFun {
                self.$imp(rhs).expect("ratfun operands share a universe")
            }
        }
        impl std::ops::$trait<RatFun> for RatFun {
            type Output = RatFun;
            fn $method(self, rhs: RatFun) -> RatFun {
                (&self).$imp(&rhs).expect("ratfun operands share a universe")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);
binop!(Div, div, try_div);

impl std::ops::Neg for &RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        RatFun::neg(self)
    }
}

impl std::ops::Neg for RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        RatFun::neg(&self)
    }
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&expr::print(self))
    }
}

impl fmt::Debug for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatFun({})", expr::print(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Arc<VarUniverse> {
        VarUniverse::parameters(&["x", "y"]).unwrap()
    }

    fn p(u: &Arc<VarUniverse>, s: &str) -> RatFun {
        RatFun::parse(u, s).unwrap()
    }

    #[test]
    fn arith_examples() {
        let u = xy();
        assert_eq!(&p(&u, "x+y") * &p(&u, "x-y"), p(&u, "x^2-y^2"));
        let f = p(&u, "(x+1)/(x-y)");
        assert_eq!(&f + &RatFun::zero(&u), f);
        assert!((&p(&u, "1/(x-y)") + &p(&u, "1/(y-x)")).is_zero());
    }

    #[test]
    fn inverse_examples() {
        let u = xy();
        assert_eq!(p(&u, "x").inverse().unwrap(), p(&u, "1/x"));
        assert_eq!(p(&u, "(x-y)/x").inverse().unwrap(), p(&u, "x/(x-y)"));
        assert_eq!(RatFun::zero(&u).inverse(), Err(Error::DivisionByZero));
    }

    #[test]
    fn derivative_examples() {
        let u = xy();
        assert_eq!(p(&u, "x^2*y").derivative(0).unwrap(), p(&u, "2*x*y"));
        assert_eq!(p(&u, "1/(x-y)").derivative(0).unwrap(), p(&u, "-1/(x-y)^2"));
        assert!(p(&u, "x").derivative(1).unwrap().is_zero());
        assert!(matches!(p(&u, "x").derivative(7), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn substitute_examples() {
        let u = VarUniverse::parameters(&["z", "a"]).unwrap();
        let f = p(&u, "1/(z-a)");
        let two_a = p(&u, "2*a");
        assert_eq!(f.substitute(0, &two_a).unwrap(), p(&u, "1/a"));
        assert!(p(&u, "z^2").substitute(0, &RatFun::zero(&u)).unwrap().is_zero());
        assert!(matches!(f.substitute(0, &p(&u, "a")), Err(Error::PoleHit { .. })));
    }

    #[test]
    fn eval_numeric_examples() {
        let u = xy();
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let v = p(&u, "1/(x-y)").eval_numeric(&[c(3.0, 0.0), c(1.0, 0.0)], 1e-12).unwrap();
        assert!((v - c(0.5, 0.0)).norm() < 1e-15);
        let v = p(&u, "x^2+1").eval_numeric(&[c(0.0, 1.0), c(0.0, 0.0)], 1e-12).unwrap();
        assert!(v.norm() < 1e-15);
        let e = p(&u, "1/(x-y)").eval_numeric(&[c(1.0, 0.0), c(1.0, 0.0)], 1e-12);
        assert!(matches!(e, Err(Error::NearZeroDenominator { .. })));
    }

    #[test]
    fn canonical_examples() {
        let u = xy();
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let f = RatFun::from_fraction(&u, x.pow(2).sub(&y.pow(2)), x.sub(&y)).unwrap();
        assert_eq!(f, p(&u, "x+y"));
        assert!(f.is_polynomial());
        let f = RatFun::from_fraction(&u, x.scale(&Coeff::from_integer(2.into())), Poly::from_int(2, 4)).unwrap();
        assert_eq!(f.to_string(), "1/2*x");
        let f = RatFun::from_fraction(&u, Poly::zero(2), x.clone()).unwrap();
        assert!(f.is_zero() && f.denom().is_one());
        assert_eq!(RatFun::from_fraction(&u, x, Poly::zero(2)), Err(Error::DivisionByZero));
    }

    #[test]
    fn denominator_scale_is_canonical() {
        let u = xy();
        let f = p(&u, "1/(2*y-4*x)");
        // x leads y, so the stored denominator is 2x - y
        assert_eq!(f.to_string(), "(-1/2)/(2*x - y)");
    }

    #[test]
    fn universe_mismatch_is_reported() {
        let a = RatFun::one(&xy());
        let b = RatFun::one(&VarUniverse::parameters(&["s"]).unwrap());
        assert_eq!(a.try_add(&b), Err(Error::UniverseMismatch));
    }
}
