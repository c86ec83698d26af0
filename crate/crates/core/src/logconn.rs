//! Logarithmic connections on the trivial bundle over the projective line,
//! `∇ = Φ + Σ_ν A^ν dlog(z - a_ν)`, and their Gauss-Manin data.
//!
//! Layouts: the Gauss-Manin block matrix `B` is `Nδ x Nδ` with row/column
//! `(ν, j) ↦ ν·N + j`. The relative differential `∇rel` is `N x Nδ` with
//! `∇rel[j][(ν, k)] = A^ν_jk`, and a splitting perturbation `φ` is `Nδ x N`.
//! Both are the transposes of the column-vector layout, matching the
//! row-as-source convention of [`MatForm`].

use std::sync::Arc;

use crate::chern_simons::{transgress, transgression_form, CSClass};
use crate::error::{Error, Result};
use crate::exterior::{Form, GenUniverse, Mask};
use crate::matform::MatForm;
use crate::ratfun::{Coeff, RatFun, VarKind, VarUniverse, Variable};

pub const FIBER: &str = "z";

#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Symbol(String),
    Value(Coeff),
}

/// Variable universe `a.., t.., z` and its generator universe without formal generators.
pub fn universe(points: &[Point], params: &[String]) -> Result<Arc<GenUniverse>> {
    let mut vars = Vec::new();
    for p in points {
        if let Point::Symbol(s) = p {
            vars.push(Variable { name: s.clone(), kind: VarKind::BasePoint });
        }
    }
    for t in params {
        vars.push(Variable { name: t.clone(), kind: VarKind::Parameter });
    }
    vars.push(Variable { name: FIBER.into(), kind: VarKind::Fiber });
    GenUniverse::new(VarUniverse::new(vars)?, 0)
}

#[derive(Debug, Clone)]
pub struct LogConnectionP1 {
    gens: Arc<GenUniverse>,
    points: Vec<Point>,
    point_values: Vec<RatFun>,
    fiber: usize,
    residues: Vec<MatForm>,
    phi: MatForm,
    /// `dlog(a_ν - a_τ)`, zero on the diagonal.
    pair_dlog: Vec<Vec<Form>>,
}

#[derive(Debug, Clone)]
pub struct BasicVerdict {
    pub basic: bool,
    /// First nonzero discrepancy: `(point index, row, column, form)` from the
    /// differential-system route, or the offending curvature term.
    pub witness: Option<(usize, usize, usize, Form)>,
    pub curvature_witness: Option<Form>,
}

#[derive(Debug, Clone)]
pub struct GaussManinData {
    pub phi_gm: MatForm,
    /// `blocks[ν][τ]`, each `N x N`.
    pub blocks: Vec<Vec<MatForm>>,
    pub b: MatForm,
    pub nabla_rel: MatForm,
}

impl GaussManinData {
    pub fn diagonal_block(&self, tau: usize) -> &MatForm {
        &self.blocks[tau][tau]
    }
}

#[derive(Debug, Clone)]
pub struct Perturbed {
    pub phi: MatForm,
    pub psi: MatForm,
}

impl Perturbed {
    /// `Tr(Φ′) - Tr(Ψ′)`.
    pub fn trace_difference(&self) -> Result<Form> {
        self.phi.trace()?.try_sub(&self.psi.trace()?)
    }
}

/// Letter of a noncommuting monomial in `B` and `dB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    B,
    DB,
}

pub fn parse_word(s: &str) -> Result<Vec<Letter>> {
    let mut out = Vec::new();
    for part in s.split(|c: char| c == '*' || c == '.' || c.is_whitespace()).filter(|p| !p.is_empty()) {
        out.push(match part {
            "B" => Letter::B,
            "dB" => Letter::DB,
            other => return Err(Error::Syntax { line: 1, column: 1, message: format!("unknown letter `{other}`") }),
        });
    }
    if out.is_empty() {
        return Err(Error::Syntax { line: 1, column: 1, message: "empty word".into() });
    }
    Ok(out)
}

pub fn word_to_string(w: &[Letter]) -> String {
    w.iter().map(|l| if *l == Letter::B { "B" } else { "dB" }).collect::<Vec<_>>().join("*")
}

/// All words of length `1..=max_len`.
pub fn all_words(max_len: usize) -> Vec<Vec<Letter>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Letter>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for l in [Letter::B, Letter::DB] {
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn eval_word(b: &MatForm, db: &MatForm, word: &[Letter]) -> Result<MatForm> {
    let pick = |l: &Letter| if *l == Letter::B { b } else { db };
    let mut acc = pick(&word[0]).clone();
    for l in &word[1..] {
        acc = acc.try_mul(pick(l))?;
    }
    Ok(acc)
}

impl LogConnectionP1 {
    pub fn new(gens: &Arc<GenUniverse>, points: Vec<Point>, residues: Vec<MatForm>, phi: MatForm) -> Result<Self> {
        let vars = gens.vars().clone();
        let fiber = vars.fiber().ok_or_else(|| Error::InvalidConnection("universe has no fiber variable".into()))?;
        if points.is_empty() {
            return Err(Error::InvalidConnection("at least one marked point is required".into()));
        }
        if residues.len() != points.len() {
            return Err(Error::InvalidConnection(format!(
                "{} residue matrices for {} points",
                residues.len(),
                points.len()
            )));
        }
        let n = phi.rows();
        if !phi.is_square() || n == 0 {
            return Err(Error::Shape("base part must be a nonempty square matrix".into()));
        }
        let mut point_values = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            let v = match p {
                Point::Symbol(s) => {
                    let k = vars.index_of(s).ok_or_else(|| Error::UnknownVariable(s.clone()))?;
                    if vars.kind(k) != VarKind::BasePoint {
                        return Err(Error::InvalidConnection(format!("`{s}` is not a base-point variable")));
                    }
                    RatFun::var(&vars, k)
                }
                Point::Value(c) => RatFun::constant(&vars, c.clone()),
            };
            if point_values.contains(&v) {
                return Err(Error::InvalidConnection(format!("point {} coincides with an earlier point", i + 1)));
            }
            point_values.push(v);
        }
        for (i, a) in residues.iter().enumerate() {
            if a.rows() != n || a.cols() != n {
                return Err(Error::Shape(format!("residue {} is not {n}x{n}", i + 1)));
            }
            if !a.is_homogeneous_of(0) {
                return Err(Error::InvalidConnection(format!("residue {} must have 0-form entries", i + 1)));
            }
            if a.entries().iter().any(|e| e.terms().any(|(_, c)| c.depends_on(fiber))) {
                return Err(Error::InvalidConnection(format!("residue {} depends on {FIBER}", i + 1)));
            }
        }
        if !phi.is_homogeneous_of(1) {
            return Err(Error::InvalidConnection("base part must have 1-form entries".into()));
        }
        if phi.entries().iter().any(|e| e.terms().any(|(m, c)| m & (1 << fiber) != 0 || c.depends_on(fiber))) {
            return Err(Error::InvalidConnection(format!("base part involves {FIBER} or d{FIBER}")));
        }
        let delta = points.len();
        let mut pair_dlog = vec![vec![Form::zero(gens); delta]; delta];
        for nu in 0..delta {
            for tau in 0..delta {
                if nu != tau {
                    pair_dlog[nu][tau] = Form::dlog(gens, &(&point_values[nu] - &point_values[tau]))?;
                }
            }
        }
        Ok(LogConnectionP1 { gens: gens.clone(), points, point_values, fiber, residues, phi, pair_dlog })
    }

    pub fn gens(&self) -> &Arc<GenUniverse> {
        &self.gens
    }

    pub fn vars(&self) -> &Arc<VarUniverse> {
        self.gens.vars()
    }

    pub fn rank(&self) -> usize {
        self.phi.rows()
    }

    pub fn delta(&self) -> usize {
        self.points.len()
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point_value(&self, nu: usize) -> &RatFun {
        &self.point_values[nu]
    }

    pub fn residues(&self) -> &[MatForm] {
        &self.residues
    }

    pub fn phi(&self) -> &MatForm {
        &self.phi
    }

    /// `dlog(a_ν - a_τ)`.
    pub fn pair_dlog(&self, nu: usize, tau: usize) -> &Form {
        &self.pair_dlog[nu][tau]
    }

    /// Differentials of every variable except the fiber.
    pub fn base_mask(&self) -> Mask {
        ((1u64 << self.vars().len()) - 1) & !(1 << self.fiber)
    }

    /// Variable indices of the symbolic points.
    pub fn symbolic_point_vars(&self) -> Vec<usize> {
        self.points
            .iter()
            .filter_map(|p| match p {
                Point::Symbol(s) => self.vars().index_of(s),
                Point::Value(_) => None,
            })
            .collect()
    }

    /// `dlog(z - a_ν)`.
    pub fn fiber_dlog(&self, nu: usize) -> Form {
        let z = RatFun::var(self.vars(), self.fiber);
        Form::dlog(&self.gens, &(&z - &self.point_values[nu])).expect("z - a is nonzero")
    }

    pub fn total_matrix(&self) -> MatForm {
        let mut out = self.phi.clone();
        for (nu, a) in self.residues.iter().enumerate() {
            out = &out + &a.wedge_right(&self.fiber_dlog(nu));
        }
        out
    }

    pub fn residue(&self, nu: usize) -> &MatForm {
        &self.residues[nu]
    }

    /// `-Σ_ν A^ν`.
    pub fn residue_infinity(&self) -> MatForm {
        let mut out = MatForm::zero(&self.gens, self.rank(), self.rank());
        for a in &self.residues {
            out = &out - a;
        }
        out
    }

    /// `dA_i - [Φ, A_i] + Σ_{j≠i} [A_i, A_j] dlog(a_i - a_j)`; all vanish iff the curvature is basic.
    pub fn basic_defects(&self) -> Result<Vec<MatForm>> {
        let delta = self.delta();
        let mut out = Vec::with_capacity(delta);
        for i in 0..delta {
            let ai = &self.residues[i];
            let mut x = ai.d().try_sub(&self.phi.commutator(ai)?)?;
            for j in 0..delta {
                if j != i {
                    let c = ai.commutator(&self.residues[j])?;
                    x = x.try_add(&c.wedge_right(&self.pair_dlog[i][j]))?;
                }
            }
            out.push(x);
        }
        Ok(out)
    }

    /// Term of the total curvature with a `dz` factor or a `z`-dependent coefficient.
    fn curvature_route(&self) -> Result<Option<Form>> {
        let f = self.total_matrix().curvature()?;
        let z = self.fiber;
        for e in f.entries() {
            for (m, c) in e.terms() {
                if m & (1 << z) != 0 || c.depends_on(z) {
                    return Ok(Some(Form::term(&self.gens, m, c.clone())));
                }
            }
        }
        Ok(None)
    }

    /// Basic-curvature test by two independent routes; disagreement is an error.
    pub fn check_basic(&self) -> Result<BasicVerdict> {
        let curvature_witness = self.curvature_route()?;
        let defects = self.basic_defects()?;
        let n = self.rank();
        let mut witness = None;
        'outer: for (i, x) in defects.iter().enumerate() {
            for r in 0..n {
                for c in 0..n {
                    if !x.get(r, c).is_zero() {
                        witness = Some((i, r, c, x.get(r, c).clone()));
                        break 'outer;
                    }
                }
            }
        }
        if curvature_witness.is_some() != witness.is_some() {
            return Err(Error::Consistency(format!(
                "basic-curvature routes disagree: curvature route {}, differential-system route {}",
                if curvature_witness.is_some() { "fails" } else { "passes" },
                if witness.is_some() { "fails" } else { "passes" }
            )));
        }
        Ok(BasicVerdict { basic: witness.is_none(), witness, curvature_witness })
    }

    pub fn gm_data(&self) -> Result<GaussManinData> {
        let (n, delta) = (self.rank(), self.delta());
        let u = &self.gens;
        let mut blocks = vec![vec![MatForm::zero(u, n, n); delta]; delta];
        for nu in 0..delta {
            for tau in 0..delta {
                blocks[nu][tau] = if nu == tau {
                    let mut d = self.phi.clone();
                    for theta in 0..delta {
                        if theta != nu {
                            d = d.try_add(&self.residues[theta].wedge_right(&self.pair_dlog[nu][theta]))?;
                        }
                    }
                    d
                } else {
                    self.residues[tau].wedge_right(&self.pair_dlog[nu][tau]).neg()
                };
            }
        }
        let b = MatForm::from_blocks(u, &blocks)?;
        let nabla_rel = MatForm::from_fn(u, n, n * delta, |j, col| {
            let (nu, k) = (col / n, col % n);
            self.residues[nu].get(j, k).clone()
        });
        Ok(GaussManinData { phi_gm: self.phi.clone(), blocks, b, nabla_rel })
    }

    /// `Φ·∇rel - ∇rel·B - d∇rel`; block `τ` equals `-X_τ` of [`Self::basic_defects`].
    pub fn diagram_defect(&self, gm: &GaussManinData) -> Result<MatForm> {
        gm.phi_gm
            .try_mul(&gm.nabla_rel)?
            .try_sub(&gm.nabla_rel.try_mul(&gm.b)?)?
            .try_sub(&gm.nabla_rel.d())
    }

    pub fn nw_bundle(&self, n: usize) -> Result<CSClass> {
        transgress(&self.total_matrix(), n)
    }

    /// `TP(Φ) - Σ_τ TP(B_ττ)`, cross-checked against `TP` of the full block matrix.
    pub fn nw_gm(&self, n: usize) -> Result<Form> {
        let gm = self.gm_data()?;
        self.nw_gm_with(&gm, n)
    }

    pub fn nw_gm_with(&self, gm: &GaussManinData, n: usize) -> Result<Form> {
        let mut sum = Form::zero(&self.gens);
        for tau in 0..self.delta() {
            sum.add_assign(&transgression_form(gm.diagonal_block(tau), n)?);
        }
        let full = transgression_form(&gm.b, n)?;
        if full != sum {
            return Err(Error::Consistency(format!(
                "full block transgression differs from the sum over diagonal blocks by {}",
                full.try_sub(&sum)?
            )));
        }
        transgression_form(&gm.phi_gm, n)?.try_sub(&sum)
    }

    /// `Tr(M(B)) - Σ_τ Tr(M(B_ττ))` for a word `M` in `B` and `dB`.
    pub fn trace_monomial_defect(&self, gm: &GaussManinData, word: &[Letter]) -> Result<Form> {
        if word.is_empty() {
            return Err(Error::Shape("empty monomial".into()));
        }
        let lhs = eval_word(&gm.b, &gm.b.d(), word)?.trace()?;
        let mut rhs = Form::zero(&self.gens);
        for tau in 0..self.delta() {
            let bt = gm.diagonal_block(tau);
            rhs.add_assign(&eval_word(bt, &bt.d(), word)?.trace()?);
        }
        lhs.try_sub(&rhs)
    }

    /// Changes the splitting by `φ` (`Nδ x N` of 1-forms): `Φ′ = Φ - ∇rel·φ`, `Ψ′ = B - φ·∇rel`.
    pub fn perturb_splitting(&self, gm: &GaussManinData, phi_pert: &MatForm) -> Result<Perturbed> {
        let (n, nd) = (self.rank(), self.rank() * self.delta());
        if phi_pert.rows() != nd || phi_pert.cols() != n {
            return Err(Error::Shape(format!("splitting perturbation must be {nd}x{n}")));
        }
        Ok(Perturbed {
            phi: gm.phi_gm.try_sub(&gm.nabla_rel.try_mul(phi_pert)?)?,
            psi: gm.b.try_sub(&phi_pert.try_mul(&gm.nabla_rel)?)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(names: &[&str]) -> Vec<Point> {
        names.iter().map(|s| Point::Symbol(s.to_string())).collect()
    }

    fn scalars(u: &Arc<GenUniverse>, rows: &[&[&str]]) -> MatForm {
        let g: Vec<Vec<RatFun>> =
            rows.iter().map(|r| r.iter().map(|s| RatFun::parse(u.vars(), s).unwrap()).collect()).collect();
        MatForm::from_scalars(u, &g).unwrap()
    }

    #[test]
    fn total_matrix_and_residues() {
        let pts = sym(&["a1", "a2"]);
        let u = universe(&pts, &[]).unwrap();
        let a1 = scalars(&u, &[&["3"]]);
        let a2 = scalars(&u, &[&["1/2"]]);
        let c = LogConnectionP1::new(&u, pts, vec![a1.clone(), a2.clone()], MatForm::zero(&u, 1, 1)).unwrap();
        let expected = &c.fiber_dlog(0).scale_int(3) + &c.fiber_dlog(1).scale(&RatFun::from_ratio(c.vars(), 1, 2));
        assert_eq!(c.total_matrix().get(0, 0), &expected);
        let total = &(&c.residue_infinity() + &a1) + &a2;
        assert!(total.is_zero());
    }

    #[test]
    fn noncommuting_residues_are_not_basic() {
        let pts = sym(&["a1", "a2"]);
        let u = universe(&pts, &[]).unwrap();
        let a1 = scalars(&u, &[&["0", "1"], &["0", "0"]]);
        let a2 = scalars(&u, &[&["0", "0"], &["1", "0"]]);
        let c = LogConnectionP1::new(&u, pts, vec![a1, a2], MatForm::zero(&u, 2, 2)).unwrap();
        let v = c.check_basic().unwrap();
        assert!(!v.basic);
        let (i, r, col, w) = v.witness.unwrap();
        assert_eq!((i, r, col), (0, 0, 0));
        assert_eq!(w, *c.pair_dlog(0, 1));
    }

    #[test]
    fn scalar_residues_are_basic_and_diagram_commutes() {
        let pts = sym(&["a1", "a2", "a3"]);
        let u = universe(&pts, &["t1".into(), "t2".into()]).unwrap();
        let ids: Vec<MatForm> = ["2", "-1/3", "5"].iter().map(|l| scalars(&u, &[&[l, "0"], &["0", l]])).collect();
        let vars = u.vars().clone();
        let phi = MatForm::from_fn(&u, 2, 2, |i, j| {
            Form::scalar(&u, RatFun::parse(&vars, &format!("t1^{i}*a1+{j}*t2")).unwrap()).wedge(&Form::dvar(&u, 3 + (i + j) % 2))
        });
        let c = LogConnectionP1::new(&u, pts, ids, phi).unwrap();
        assert!(c.check_basic().unwrap().basic);
        let gm = c.gm_data().unwrap();
        assert!(c.diagram_defect(&gm).unwrap().is_zero());
    }

    #[test]
    fn gm_blocks_two_points_rank_one() {
        let pts = sym(&["a1", "a2"]);
        let u = universe(&pts, &["al".into(), "be".into()]).unwrap();
        let c = LogConnectionP1::new(&u, pts, vec![scalars(&u, &[&["al"]]), scalars(&u, &[&["be"]])], MatForm::zero(&u, 1, 1))
            .unwrap();
        let gm = c.gm_data().unwrap();
        let uu = c.pair_dlog(0, 1).clone();
        let s = |t: &str| RatFun::parse(c.vars(), t).unwrap();
        assert_eq!(gm.b.get(0, 0), &uu.scale(&s("be")));
        assert_eq!(gm.b.get(0, 1), &uu.scale(&s("-be")));
        assert_eq!(gm.b.get(1, 0), &uu.scale(&s("-al")));
        assert_eq!(gm.b.get(1, 1), &uu.scale(&s("al")));
        assert_eq!(c.nw_gm(1).unwrap(), uu.scale(&s("-al-be")));
    }

    #[test]
    fn validation_errors() {
        let pts = sym(&["a1", "a1"]);
        assert!(universe(&pts, &[]).is_err());
        let pts = vec![Point::Value(Coeff::from_integer(2.into())), Point::Value(Coeff::from_integer(2.into()))];
        let u = universe(&pts, &[]).unwrap();
        let one = scalars(&u, &[&["1"]]);
        assert!(LogConnectionP1::new(&u, pts, vec![one.clone(), one.clone()], MatForm::zero(&u, 1, 1)).is_err());
        let pts = sym(&["a1"]);
        let u = universe(&pts, &[]).unwrap();
        let bad = scalars(&u, &[&["z"]]);
        assert!(LogConnectionP1::new(&u, pts, vec![bad], MatForm::zero(&u, 1, 1)).is_err());
    }

    #[test]
    fn words() {
        assert_eq!(all_words(4).len(), 30);
        assert_eq!(parse_word("B*dB*B").unwrap(), vec![Letter::B, Letter::DB, Letter::B]);
        assert!(parse_word("C").is_err());
    }
}
