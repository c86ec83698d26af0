//! Pushforward of a connection along a finite etale map `Spec M -> Spec L`,
//! `M = L[t]/φ(t)`, in the monomial basis `t^i e_j` (index `i·N + j`).

use std::sync::Arc;
use std::time::Instant;

use serde_json::json;

use crate::chern_simons::{second_gauge_primitive, transgression_form, Modulus};
use crate::error::{Error, Result};
use crate::exterior::{Form, GenUniverse};
use crate::matform::MatForm;
use crate::ratfun::RatFun;
use crate::report::{form_to_json, Status, VerificationReport};

/// Dense univariate polynomial in `t`, lowest degree first, no trailing zeros.
type UPoly = Vec<RatFun>;

fn trim(mut p: UPoly) -> UPoly {
    while p.last().is_some_and(RatFun::is_zero) {
        p.pop();
    }
    p
}

fn usub(a: &[RatFun], b: &[RatFun], zero: &RatFun) -> UPoly {
    let n = a.len().max(b.len());
    trim((0..n).map(|i| &a.get(i).unwrap_or(zero).clone() - b.get(i).unwrap_or(zero)).collect())
}

fn umul(a: &[RatFun], b: &[RatFun], zero: &RatFun) -> UPoly {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![zero.clone(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    trim(out)
}

/// `(q, r)` with `a = q b + r`, `deg r < deg b`.
fn udivrem(a: &[RatFun], b: &[RatFun], zero: &RatFun) -> Result<(UPoly, UPoly)> {
    let b = trim(b.to_vec());
    let lb = b.last().ok_or(Error::DivisionByZero)?.inverse()?;
    let mut r = trim(a.to_vec());
    if r.len() < b.len() {
        return Ok((vec![], r));
    }
    let mut q = vec![zero.clone(); r.len() - b.len() + 1];
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let f = r.last().expect("nonempty") * &lb;
        for (i, c) in b.iter().enumerate() {
            r[shift + i] = &r[shift + i] - &(&f * c);
        }
        q[shift] = f;
        r.pop();
        r = trim(r);
    }
    Ok((trim(q), r))
}

/// Finite algebra `L[t]/φ(t)` with an optional connection `d + Σ_l t^l A_l` on `M^N`.
#[derive(Debug, Clone)]
pub struct FiniteAlgebra {
    gens: Arc<GenUniverse>,
    /// Monic `φ`, lowest coefficient first; coefficients free of `t`.
    phi: UPoly,
    rank: usize,
    blocks: Vec<MatForm>,
    roots: Option<Vec<RatFun>>,
}

#[derive(Debug, Clone)]
pub struct Pushforward {
    /// `rN x rN` connection matrix of the pushforward.
    pub b: MatForm,
    /// `B` for `N = 1`, `A = 0`.
    pub b0: MatForm,
    /// Trace form `Tr(t^{i+j})`.
    pub gram: MatForm,
    pub w1: Form,
    /// `Tr_{M/L}(Σ_l t^l Tr A_l)`.
    pub trace_part: Form,
    /// `N Σ_i β_ii` with `d(t^i) = Σ_m β_im t^m`.
    pub derivation_part: Form,
}

impl FiniteAlgebra {
    /// `phi` is a polynomial in the fiber variable of `gens`; `blocks[l]` multiplies `t^l`.
    pub fn new(
        gens: &Arc<GenUniverse>,
        phi: &RatFun,
        rank: usize,
        blocks: Vec<MatForm>,
        roots: Option<Vec<RatFun>>,
    ) -> Result<Self> {
        let vars = gens.vars();
        let t = vars.fiber().ok_or_else(|| Error::InvalidAlgebra("no fiber variable for t".into()))?;
        if phi.denom().depends_on(t) {
            return Err(Error::InvalidAlgebra("φ must be polynomial in t".into()));
        }
        let den = RatFun::from_poly(vars, phi.denom().clone()).inverse()?;
        let coeffs: UPoly = trim(
            phi.numer()
                .coefficients_in(t)
                .into_iter()
                .map(|c| &RatFun::from_poly(vars, c) * &den)
                .collect(),
        );
        if coeffs.len() < 2 {
            return Err(Error::InvalidAlgebra("φ must have degree at least 1".into()));
        }
        if !coeffs.last().expect("nonempty").is_one() {
            return Err(Error::InvalidAlgebra("φ must be monic".into()));
        }
        if rank == 0 {
            return Err(Error::Shape("bundle rank must be positive".into()));
        }
        for (l, a) in blocks.iter().enumerate() {
            if a.rows() != rank || a.cols() != rank {
                return Err(Error::Shape(format!("block {l} is not {rank}x{rank}")));
            }
            if !a.is_homogeneous_of(1) {
                return Err(Error::Degree(format!("block {l} must have 1-form entries")));
            }
            if a.entries().iter().any(|e| e.terms().any(|(m, c)| m & (1 << t) != 0 || c.depends_on(t))) {
                return Err(Error::InvalidAlgebra(format!("block {l} involves t")));
            }
        }
        if let Some(r) = &roots {
            if r.iter().any(|x| x.depends_on(t)) {
                return Err(Error::InvalidAlgebra("roots must be free of t".into()));
            }
        }
        let fa = FiniteAlgebra { gens: gens.clone(), phi: coeffs, rank, blocks, roots };
        if fa.gram()?.det()?.is_zero() {
            return Err(Error::ZeroDiscriminant);
        }
        if let Some(r) = &fa.roots {
            let zero = fa.zero();
            let one = RatFun::one(vars);
            let mut prod: UPoly = vec![one.clone()];
            for x in r {
                prod = umul(&prod, &[x.neg(), one.clone()], &zero);
            }
            if prod != fa.phi {
                return Err(Error::InvalidAlgebra("declared roots do not multiply out to φ".into()));
            }
        }
        Ok(fa)
    }

    pub fn gens(&self) -> &Arc<GenUniverse> {
        &self.gens
    }

    pub fn degree(&self) -> usize {
        self.phi.len() - 1
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn roots(&self) -> Option<&[RatFun]> {
        self.roots.as_deref()
    }

    fn zero(&self) -> RatFun {
        RatFun::zero(self.gens.vars())
    }

    /// Coefficients of `t^k mod φ`, length `r`.
    fn power_mod(&self, k: usize) -> Vec<RatFun> {
        let r = self.degree();
        let mut cur: Vec<RatFun> = vec![self.zero(); r];
        if k < r {
            cur[k] = RatFun::one(self.gens.vars());
            return cur;
        }
        cur[r - 1] = RatFun::one(self.gens.vars());
        for _ in r - 1..k {
            // multiply by t and reduce with t^r = -Σ φ_i t^i
            let top = cur[r - 1].clone();
            for i in (1..r).rev() {
                cur[i] = &cur[i - 1] - &(&top * &self.phi[i]);
            }
            cur[0] = (&top * &self.phi[0]).neg();
        }
        cur
    }

    /// `Tr_{M/L}(t^k)`.
    pub fn trace_power(&self, k: usize) -> RatFun {
        let mut acc = self.zero();
        for i in 0..self.degree() {
            acc = &acc + &self.power_mod(k + i)[i];
        }
        acc
    }

    pub fn gram(&self) -> Result<MatForm> {
        let r = self.degree();
        let tr: Vec<RatFun> = (0..2 * r - 1).map(|k| self.trace_power(k)).collect();
        let rows: Vec<Vec<RatFun>> = (0..r).map(|i| (0..r).map(|j| tr[i + j].clone()).collect()).collect();
        MatForm::from_scalars(&self.gens, &rows)
    }

    /// `dt ∈ M ⊗ Ω¹_L` as coefficients of `t^0..t^{r-1}`: `dt = -(d_L φ)(t) / φ'(t)`.
    pub fn dt(&self) -> Result<Vec<Form>> {
        let r = self.degree();
        let zero = self.zero();
        let dphi: UPoly = trim((1..=r).map(|i| &self.phi[i] * &RatFun::from_int(self.gens.vars(), i as i64)).collect());
        let inv = self.inverse_mod(&dphi)?;
        let mut out = vec![Form::zero(&self.gens); r];
        // d_L φ(t) = Σ_i dφ_i t^i with dφ_r = 0
        for (i, c) in self.phi.iter().enumerate().take(r) {
            let dc = Form::scalar(&self.gens, c.clone()).d();
            if dc.is_zero() {
                continue;
            }
            let mut shifted = vec![zero.clone(); i];
            shifted.extend(inv.iter().cloned());
            let (_, rem) = udivrem(&shifted, &self.phi, &zero)?;
            for (m, x) in rem.iter().enumerate() {
                out[m].sub_assign(&dc.scale(x));
            }
        }
        Ok(out)
    }

    /// Inverse of `a` modulo `φ` by the extended Euclidean algorithm.
    fn inverse_mod(&self, a: &[RatFun]) -> Result<UPoly> {
        let zero = self.zero();
        let one = RatFun::one(self.gens.vars());
        let (mut r0, mut r1) = (self.phi.clone(), trim(a.to_vec()));
        let (mut s0, mut s1): (UPoly, UPoly) = (vec![], vec![one]);
        while r1.len() > 1 {
            let (q, r) = udivrem(&r0, &r1, &zero)?;
            let s = usub(&s0, &umul(&q, &s1, &zero), &zero);
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
        }
        let c = r1.first().filter(|c| !c.is_zero()).ok_or(Error::ZeroDiscriminant)?.inverse()?;
        let (_, rem) = udivrem(&s1.iter().map(|x| x * &c).collect::<Vec<_>>(), &self.phi, &zero)?;
        Ok(rem)
    }

    /// `β_im` with `d(t^i) = Σ_m β_im t^m`.
    pub fn derivation_matrix(&self) -> Result<MatForm> {
        let r = self.degree();
        let dt = self.dt()?;
        let mut beta = MatForm::zero(&self.gens, r, r);
        for i in 1..r {
            // d(t^i) = i t^{i-1} dt
            for (l, f) in dt.iter().enumerate() {
                if f.is_zero() {
                    continue;
                }
                let red = self.power_mod(i - 1 + l);
                for (m, x) in red.iter().enumerate() {
                    if !x.is_zero() {
                        let mut e = beta.get(i, m).clone();
                        e.add_assign(&f.scale(&(x * &RatFun::from_int(self.gens.vars(), i as i64))));
                        beta.set(i, m, e);
                    }
                }
            }
        }
        Ok(beta)
    }

    pub fn build(&self) -> Result<Pushforward> {
        let (r, n) = (self.degree(), self.rank);
        let beta = self.derivation_matrix()?;
        let mut b = MatForm::zero(&self.gens, r * n, r * n);
        for i in 0..r {
            for m in 0..r {
                for j in 0..n {
                    let mut e = b.get(i * n + j, m * n + j).clone();
                    e.add_assign(beta.get(i, m));
                    b.set(i * n + j, m * n + j, e);
                }
            }
            for (l, a) in self.blocks.iter().enumerate() {
                let red = self.power_mod(i + l);
                for (m, x) in red.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        for k in 0..n {
                            let mut e = b.get(i * n + j, m * n + k).clone();
                            e.add_assign(&a.get(j, k).scale(x));
                            b.set(i * n + j, m * n + k, e);
                        }
                    }
                }
            }
        }
        let w1 = b.trace()?;
        let mut trace_part = Form::zero(&self.gens);
        for (l, a) in self.blocks.iter().enumerate() {
            trace_part.add_assign(&a.trace()?.scale(&self.trace_power(l)));
        }
        let derivation_part = beta.trace()?.scale_int(n as i64);
        Ok(Pushforward { b, b0: beta, gram: self.gram()?, w1, trace_part, derivation_part })
    }

    /// `Σ_l r^l A_l`.
    pub fn specialize(&self, root: &RatFun) -> Result<MatForm> {
        let mut acc = MatForm::zero(&self.gens, self.rank, self.rank);
        let mut pw = RatFun::one(self.gens.vars());
        for a in &self.blocks {
            acc = acc.try_add(&a.scale(&pw))?;
            pw = &pw * root;
        }
        Ok(acc)
    }

    /// Change of basis from the idempotent basis to `t^i e_j`, `P[(i,j),(m,k)] = r_m^i δ_jk`,
    /// and the block-diagonal connection `diag(A(r_1), ..)` it transforms.
    fn idempotent_change(&self, roots: &[RatFun]) -> Result<(MatForm, MatForm)> {
        let (r, n) = (roots.len(), self.rank);
        let u = &self.gens;
        let mut p = MatForm::zero(u, r * n, r * n);
        let mut d = MatForm::zero(u, r * n, r * n);
        for (m, x) in roots.iter().enumerate() {
            let a = self.specialize(x)?;
            for j in 0..n {
                for k in 0..n {
                    d.set(m * n + j, m * n + k, a.get(j, k).clone());
                }
            }
            for i in 0..r {
                let v = x.pow(i as i32)?;
                for j in 0..n {
                    p.set(i * n + j, m * n + j, Form::scalar(u, v.clone()));
                }
            }
        }
        Ok((p, d))
    }

    /// Vandermonde determinant `det(r_j^i)` of the declared roots.
    pub fn vandermonde_det(&self) -> Result<RatFun> {
        let roots = self.roots.as_ref().ok_or_else(|| Error::InvalidAlgebra("no roots declared".into()))?;
        let r = roots.len();
        let rows: Vec<Vec<RatFun>> = (0..r).map(|i| roots.iter().map(|x| x.pow(i as i32).expect("nonnegative power")).collect()).collect();
        MatForm::from_scalars(&self.gens, &rows)?.det()
    }
}

fn params(fa: &FiniteAlgebra) -> serde_json::Value {
    json!({ "degree": fa.degree(), "N": fa.rank() })
}

/// Trace-pairing compatibility, determinant duality, the trace decomposition and,
/// when roots are declared, the split-case comparison for `n ≤ 2`.
pub fn pushforward_checks(fa: &FiniteAlgebra) -> Result<Vec<VerificationReport>> {
    let start = Instant::now();
    let pf = fa.build()?;
    let mut out = Vec::new();

    let dual = pf.gram.d().try_sub(&pf.b0.try_mul(&pf.gram)?.try_add(&pf.gram.try_mul(&pf.b0.transpose())?)?)?;
    let mut rep = VerificationReport::new("pushforward-trace-pairing", params(fa), Status::from_bool(dual.is_zero()));
    if let Some(w) = dual.entries().iter().find(|e| !e.is_zero()) {
        rep = rep.with_form_witness(w);
    }
    out.push(rep.timed(start));

    let start = Instant::now();
    let det = pf.gram.det()?;
    let dlog = Form::dlog(&fa.gens, &det)?;
    let diff = pf.b0.trace()?.scale_int(2).try_sub(&dlog)?;
    let mut p = params(fa);
    p["value"] = json!(det.to_string());
    let mut rep = VerificationReport::new("pushforward-det-duality", p, Status::from_bool(diff.is_zero()));
    if !diff.is_zero() {
        rep = rep.with_form_witness(&diff);
    }
    out.push(rep.timed(start));

    let start = Instant::now();
    let diff = pf.w1.try_sub(&pf.trace_part.try_add(&pf.derivation_part)?)?;
    let mut p = params(fa);
    p["value"] = form_to_json(&pf.w1);
    let mut rep = VerificationReport::new("pushforward-trace-decomposition", p, Status::from_bool(diff.is_zero()));
    if !diff.is_zero() {
        rep = rep.with_form_witness(&diff);
    }
    out.push(rep.timed(start));

    if let Some(roots) = fa.roots() {
        let (basis, idem) = fa.idempotent_change(roots)?;
        if idem.gauge(&basis)? != pf.b {
            return Err(Error::Consistency("pushforward matrix is not the gauge of the split connection".into()));
        }
        for n in 1..=2 {
            let start = Instant::now();
            let mut p = params(fa);
            p["n"] = json!(n);
            let lhs = transgression_form(&pf.b, n)?;
            let mut rhs = Form::zero(&fa.gens);
            for x in roots {
                rhs.add_assign(&transgression_form(&fa.specialize(x)?, n)?);
            }
            let diff = lhs.try_sub(&rhs)?;
            p["value"] = form_to_json(&lhs);
            let rep = if diff.is_zero() {
                VerificationReport::new("pushforward-split-case", p, Status::Pass)
            } else if n == 1 {
                // the monomial and idempotent bases differ by a Vandermonde gauge
                let unit = fa.vandermonde_det()?.pow(fa.rank() as i32)?;
                let du = Form::dlog(&fa.gens, &unit)?;
                if diff == du || diff == du.neg() {
                    let unit = if diff == du { unit } else { unit.inverse()? };
                    VerificationReport::new("pushforward-split-case", p, Status::PassModDlog)
                        .with_witness(json!({ "dlog_of": unit.to_string() }))
                } else {
                    VerificationReport::new("pushforward-split-case", p, Status::Fail).with_form_witness(&diff)
                }
            } else {
                // degree-2 classes live modulo exact forms; exhibit the primitive
                match second_gauge_primitive(&idem, &basis)? {
                    Some(eta) if eta.d() == diff => {
                        p["modulus"] = json!(Modulus::ModExact);
                        VerificationReport::new("pushforward-split-case", p, Status::Pass)
                            .with_witness(json!({ "d_of": form_to_json(&eta) }))
                    }
                    _ => VerificationReport::new("pushforward-split-case", p, Status::Fail).with_form_witness(&diff),
                }
            };
            out.push(rep.timed(start));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratfun::{VarKind, VarUniverse, Variable};

    fn setup() -> Arc<GenUniverse> {
        let vars = VarUniverse::new(vec![
            Variable { name: "s".into(), kind: VarKind::Parameter },
            Variable { name: "t".into(), kind: VarKind::Fiber },
        ])
        .unwrap();
        GenUniverse::new(vars, 0).unwrap()
    }

    fn p(u: &Arc<GenUniverse>, s: &str) -> RatFun {
        RatFun::parse(u.vars(), s).unwrap()
    }

    #[test]
    fn square_root_worked_values() {
        let u = setup();
        let fa = FiniteAlgebra::new(&u, &p(&u, "t^2 - s"), 1, vec![], None).unwrap();
        let pf = fa.build().unwrap();
        let ds = Form::dvar(&u, 0);
        let b0 = MatForm::from_fn(&u, 2, 2, |i, j| if i == 1 && j == 1 { ds.scale(&p(&u, "1/(2*s)")) } else { Form::zero(&u) });
        assert_eq!(pf.b0, b0);
        assert_eq!(pf.gram, MatForm::from_scalars(&u, &[vec![p(&u, "2"), p(&u, "0")], vec![p(&u, "0"), p(&u, "2*s")]]).unwrap());
        assert!(pushforward_checks(&fa).unwrap().iter().all(|r| r.passed()));
    }

    #[test]
    fn constant_split_case() {
        let u = setup();
        let ds = Form::dvar(&u, 0);
        let a1 = MatForm::from_fn(&u, 1, 1, |_, _| ds.clone());
        let fa = FiniteAlgebra::new(&u, &p(&u, "(t-1)*(t-2)"), 1, vec![MatForm::zero(&u, 1, 1), a1], Some(vec![p(&u, "1"), p(&u, "2")]))
            .unwrap();
        let pf = fa.build().unwrap();
        assert_eq!(pf.w1, ds.scale_int(3));
        let reps = pushforward_checks(&fa).unwrap();
        assert_eq!(reps.len(), 5);
        assert!(reps.iter().all(|r| r.status == Status::Pass));
    }

    #[test]
    fn moving_roots_differ_by_explicit_terms() {
        let vars = VarUniverse::new(vec![
            Variable { name: "s".into(), kind: VarKind::Parameter },
            Variable { name: "u".into(), kind: VarKind::Parameter },
            Variable { name: "v".into(), kind: VarKind::Parameter },
            Variable { name: "t".into(), kind: VarKind::Fiber },
        ])
        .unwrap();
        let u = GenUniverse::new(vars, 0).unwrap();
        let g = |i: usize| Form::dvar(&u, i);
        let a0 = MatForm::from_fn(&u, 2, 2, |i, j| g((i + j) % 3).scale(&p(&u, &format!("u^{i} + {j}*v"))));
        let a1 = MatForm::from_fn(&u, 2, 2, |i, j| g((2 * i + j) % 3).scale(&p(&u, &format!("s - {j}"))));
        let fa = FiniteAlgebra::new(&u, &p(&u, "(t - s)*(t - u - 1)"), 2, vec![a0, a1], Some(vec![p(&u, "s"), p(&u, "u + 1")])).unwrap();
        let reps = pushforward_checks(&fa).unwrap();
        let split: Vec<_> = reps.iter().filter(|r| r.check == "pushforward-split-case").collect();
        assert_eq!(split[0].status, Status::PassModDlog, "{:?}", split[0]);
        // det(V)^N for the Vandermonde V of (s, u + 1), N = 2, or its inverse
        let unit = p(&u, split[0].witness.as_ref().unwrap()["dlog_of"].as_str().unwrap());
        assert!(unit == p(&u, "(u + 1 - s)^2") || unit == p(&u, "1/(u + 1 - s)^2"), "{unit}");
        assert_eq!(split[1].status, Status::Pass, "{:?}", split[1]);
        assert!(split[1].witness.is_some(), "degree-2 difference is expected to be exact but nonzero");
    }

    #[test]
    fn rejects_bad_algebras() {
        let u = setup();
        assert!(matches!(FiniteAlgebra::new(&u, &p(&u, "2*t^2 - s"), 1, vec![], None), Err(Error::InvalidAlgebra(_))));
        assert_eq!(FiniteAlgebra::new(&u, &p(&u, "(t-s)^2"), 1, vec![], None).unwrap_err(), Error::ZeroDiscriminant);
        assert!(FiniteAlgebra::new(&u, &p(&u, "t^2-s"), 1, vec![], Some(vec![p(&u, "s"), p(&u, "1")])).is_err());
    }
}
