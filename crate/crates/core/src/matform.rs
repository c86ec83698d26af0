//! Matrices with differential-form entries.
//!
//! Row index is the source basis vector: `m[j][k]` is the coefficient of
//! `e_k` in `∇ e_j`. With this layout the composite "first f, then g" is
//! `M_f * M_g`, curvature is `dA - A∧A` and gauge change by a basis change
//! `e' = g e` is `g A g⁻¹ + dg g⁻¹`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exterior::{Form, GenUniverse};
use crate::ratfun::{same_universe, RatFun};

#[derive(Clone, PartialEq)]
pub struct MatForm {
    universe: Arc<GenUniverse>,
    rows: usize,
    cols: usize,
    entries: Vec<Form>,
}

impl MatForm {
    pub fn zero(universe: &Arc<GenUniverse>, rows: usize, cols: usize) -> Self {
        MatForm { universe: universe.clone(), rows, cols, entries: vec![Form::zero(universe); rows * cols] }
    }

    pub fn identity(universe: &Arc<GenUniverse>, n: usize) -> Self {
        let mut m = Self::zero(universe, n, n);
        for i in 0..n {
            m.set(i, i, Form::one(universe));
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Form>(universe: &Arc<GenUniverse>, rows: usize, cols: usize, mut f: F) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                assert!(same_universe(e.universe(), universe), "entry universe");
                entries.push(e);
            }
        }
        MatForm { universe: universe.clone(), rows, cols, entries }
    }

    /// Matrix of 0-forms.
    pub fn from_scalars(universe: &Arc<GenUniverse>, rows: &[Vec<RatFun>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Self::from_fn(universe, r, c, |i, j| Form::scalar(universe, rows[i][j].clone())))
    }

    pub fn universe(&self) -> &Arc<GenUniverse> {
        &self.universe
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Form {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, f: Form) {
        self.entries[i * self.cols + j] = f;
    }

    pub fn entries(&self) -> &[Form] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Form::is_zero)
    }

    /// Every nonzero entry homogeneous of degree `p`.
    pub fn is_homogeneous_of(&self, p: u32) -> bool {
        self.entries.iter().all(|e| e.is_homogeneous_of(p))
    }

    fn map<F: Fn(&Form) -> Form>(&self, f: F) -> MatForm {
        MatForm {
            universe: self.universe.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn try_map<F: Fn(&Form) -> Result<Form>>(&self, f: F) -> Result<MatForm> {
        Ok(MatForm {
            universe: self.universe.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect::<Result<_>>()?,
        })
    }

    /// Same entries over another generator universe with the same variables.
    pub fn retarget(&self, target: &Arc<GenUniverse>) -> Result<MatForm> {
        Ok(MatForm {
            universe: target.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.retarget(target)).collect::<Result<_>>()?,
        })
    }

    fn same_shape(&self, other: &MatForm) -> Result<()> {
        if !same_universe(&self.universe, &other.universe) {
            return Err(Error::UniverseMismatch);
        }
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &MatForm) -> Result<MatForm> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            a.add_assign(b);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &MatForm) -> Result<MatForm> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            a.sub_assign(b);
        }
        Ok(out)
    }

    pub fn neg(&self) -> MatForm {
        self.map(Form::neg)
    }

    /// `α ∧ M` entrywise.
    pub fn wedge_left(&self, alpha: &Form) -> MatForm {
        self.map(|e| alpha.wedge(e))
    }

    /// `M ∧ α` entrywise.
    pub fn wedge_right(&self, alpha: &Form) -> MatForm {
        self.map(|e| e.wedge(alpha))
    }

    pub fn scale(&self, f: &RatFun) -> MatForm {
        self.map(|e| e.scale(f))
    }

    /// Entry `(i, k)` is `Σ_j X_ij ∧ Y_jk`.
    pub fn try_mul(&self, other: &MatForm) -> Result<MatForm> {
        if !same_universe(&self.universe, &other.universe) {
            return Err(Error::UniverseMismatch);
        }
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = MatForm::zero(&self.universe, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let x = self.get(i, j);
                if x.is_zero() {
                    continue;
                }
                for k in 0..other.cols {
                    let y = other.get(j, k);
                    if !y.is_zero() {
                        out.entries[i * other.cols + k].wedge_acc(x, y);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> Result<Form> {
        if !self.is_square() {
            return Err(Error::Shape(format!("trace of {}x{}", self.rows, self.cols)));
        }
        let mut out = Form::zero(&self.universe);
        for i in 0..self.rows {
            out.add_assign(self.get(i, i));
        }
        Ok(out)
    }

    pub fn d(&self) -> MatForm {
        self.map(Form::d)
    }

    /// Plain transpose of entries; meaningful for 0-forms and used for Gram-type identities.
    pub fn transpose(&self) -> MatForm {
        MatForm::from_fn(&self.universe, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    fn check_connection(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::Shape("connection matrix must be square".into()));
        }
        if !self.is_homogeneous_of(1) {
            return Err(Error::Degree("connection matrix entries must be 1-forms".into()));
        }
        Ok(())
    }

    pub fn curvature(&self) -> Result<MatForm> {
        self.check_connection()?;
        self.d().try_sub(&self.try_mul(self)?)
    }

    /// Coefficients of `F(tA)` in powers of `t`: `[0, dA, -A∧A]`.
    pub fn curvature_t(&self) -> Result<Vec<MatForm>> {
        self.check_connection()?;
        Ok(vec![
            MatForm::zero(&self.universe, self.rows, self.cols),
            self.d(),
            self.try_mul(self)?.neg(),
        ])
    }

    /// `XY - YX`; for the 1-form/0-form pairs used here this is the graded bracket.
    pub fn commutator(&self, other: &MatForm) -> Result<MatForm> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    pub fn is_scalar_matrix(&self) -> bool {
        self.is_homogeneous_of(0)
    }

    fn scalar_grid(&self) -> Result<Vec<Vec<RatFun>>> {
        if !self.is_square() {
            return Err(Error::Shape("square matrix required".into()));
        }
        if !self.is_scalar_matrix() {
            return Err(Error::Degree("0-form entries required".into()));
        }
        Ok((0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).scalar_part()).collect()).collect())
    }

    /// Determinant of a 0-form matrix by Bareiss elimination.
    pub fn det(&self) -> Result<RatFun> {
        let mut a = self.scalar_grid()?;
        let n = a.len();
        let vars = self.universe.vars().clone();
        if n == 0 {
            return Ok(RatFun::one(&vars));
        }
        let mut sign = false;
        let mut prev = RatFun::one(&vars);
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(k, i);
                        sign = !sign;
                    }
                    None => return Ok(RatFun::zero(&vars)),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &(&a[i][j] * &a[k][k]) - &(&a[i][k] * &a[k][j]);
                    a[i][j] = &num / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        let d = a[n - 1][n - 1].clone();
        Ok(if sign { d.neg() } else { d })
    }

    /// Inverse of a 0-form matrix by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<MatForm> {
        let mut a = self.scalar_grid()?;
        let n = a.len();
        let vars = self.universe.vars().clone();
        let mut inv: Vec<Vec<RatFun>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { RatFun::one(&vars) } else { RatFun::zero(&vars) }).collect())
            .collect();
        for k in 0..n {
            let p = (k..n).find(|&i| !a[i][k].is_zero()).ok_or(Error::Singular)?;
            a.swap(k, p);
            inv.swap(k, p);
            let piv = a[k][k].inverse()?;
            for j in 0..n {
                a[k][j] = &a[k][j] * &piv;
                inv[k][j] = &inv[k][j] * &piv;
            }
            for i in 0..n {
                if i == k || a[i][k].is_zero() {
                    continue;
                }
                let f = a[i][k].clone();
                for j in 0..n {
                    a[i][j] = &a[i][j] - &(&f * &a[k][j]);
                    inv[i][j] = &inv[i][j] - &(&f * &inv[k][j]);
                }
            }
        }
        MatForm::from_scalars(&self.universe, &inv)
    }

    /// `g A g⁻¹ + dg g⁻¹`.
    pub fn gauge(&self, g: &MatForm) -> Result<MatForm> {
        let gi = g.inverse()?;
        g.try_mul(self)?.try_mul(&gi)?.try_add(&g.d().try_mul(&gi)?)
    }

    /// Block `(bi, bj)` of size `rs x cs`.
    pub fn block(&self, bi: usize, bj: usize, rs: usize, cs: usize) -> MatForm {
        MatForm::from_fn(&self.universe, rs, cs, |i, j| self.get(bi * rs + i, bj * cs + j).clone())
    }

    /// Square block matrix from a grid of equally sized square blocks.
    pub fn from_blocks(universe: &Arc<GenUniverse>, blocks: &[Vec<MatForm>]) -> Result<MatForm> {
        let nb = blocks.len();
        let s = blocks.first().and_then(|r| r.first()).map_or(0, |b| b.rows);
        for r in blocks {
            if r.len() != nb || r.iter().any(|b| b.rows != s || b.cols != s) {
                return Err(Error::Shape("blocks must form a square grid of equal squares".into()));
            }
        }
        Ok(MatForm::from_fn(universe, nb * s, nb * s, |i, j| blocks[i / s][j / s].get(i % s, j % s).clone()))
    }
}

impl fmt::Debug for MatForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "MatForm {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

macro_rules! mat_binop {
    ($trait:ident, $method:ident, $imp:ident) => {
        impl std::ops::$trait<&MatForm> for &MatForm {
            type Output = MatForm;
            fn $method(self, rhs: &MatForm) -> MatForm {
                self.$imp(rhs).expect("compatible matrices")
            }
        }
    };
}

mat_binop!(Add, add, try_add);
mat_binop!(Sub, sub, try_sub);
mat_binop!(Mul, mul, try_mul);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratfun::VarUniverse;

    fn setup() -> (Arc<GenUniverse>, impl Fn(&str) -> RatFun) {
        let vars = VarUniverse::parameters(&["x", "y", "s"]).unwrap();
        let g = GenUniverse::new(vars.clone(), 0).unwrap();
        (g, move |t: &str| RatFun::parse(&vars, t).unwrap())
    }

    #[test]
    fn identity_and_one_by_one() {
        let (u, p) = setup();
        let a = MatForm::from_fn(&u, 2, 2, |i, j| Form::scalar(&u, p(&format!("x^{i}+y*{j}"))).wedge(&Form::dvar(&u, j)));
        assert_eq!(&MatForm::identity(&u, 2) * &a, a);
        let one = MatForm::from_fn(&u, 1, 1, |_, _| Form::dvar(&u, 0));
        let two = MatForm::from_fn(&u, 1, 1, |_, _| Form::dvar(&u, 1));
        assert_eq!((&one * &two).get(0, 0), &Form::dvar(&u, 0).wedge(&Form::dvar(&u, 1)));
    }

    #[test]
    fn curvature_examples() {
        let (u, p) = setup();
        let a = MatForm::from_fn(&u, 1, 1, |_, _| Form::scalar(&u, p("x*y")).wedge(&Form::dvar(&u, 2)));
        let f = a.curvature().unwrap();
        assert_eq!(f.get(0, 0), &Form::scalar(&u, p("x*y")).d().wedge(&Form::dvar(&u, 2)));
        let flat = MatForm::from_fn(&u, 1, 1, |_, _| Form::dlog(&u, &p("x-y^2")).unwrap());
        assert!(flat.curvature().unwrap().is_zero());
        let t = a.curvature_t().unwrap();
        assert!(t[2].is_zero() && t.len() == 3);
    }

    #[test]
    fn pure_gauge_is_flat() {
        let (u, p) = setup();
        let g = MatForm::from_scalars(&u, &[vec![p("x"), p("1")], vec![p("y"), p("s+x")]]).unwrap();
        let a = MatForm::zero(&u, 2, 2).gauge(&g).unwrap();
        assert!(a.curvature().unwrap().is_zero());
    }

    #[test]
    fn det_and_inverse() {
        let (u, p) = setup();
        let g = MatForm::from_scalars(&u, &[vec![p("0"), p("x"), p("1")], vec![p("y"), p("1"), p("0")], vec![p("1"), p("s"), p("x")]])
            .unwrap();
        // expansion along the first row
        assert_eq!(g.det().unwrap(), p("-x*(y*x) + (y*s - 1)"));
        assert_eq!(&g * &g.inverse().unwrap(), MatForm::identity(&u, 3));
        let sing = MatForm::from_scalars(&u, &[vec![p("x"), p("y")], vec![p("2*x"), p("2*y")]]).unwrap();
        assert!(sing.det().unwrap().is_zero());
        assert_eq!(sing.inverse().unwrap_err(), Error::Singular);
    }

    #[test]
    fn shape_errors() {
        let (u, _) = setup();
        let a = MatForm::zero(&u, 2, 3);
        assert!(matches!(a.try_mul(&a), Err(Error::Shape(_))));
        assert!(matches!(a.trace(), Err(Error::Shape(_))));
    }
}
