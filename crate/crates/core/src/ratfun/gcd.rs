//! Multivariate gcd over Q.
//!
//! Recursive primitive PRS in a chosen main variable, with a modular image
//! probe that proves the gcd has degree zero in that variable (the common case
//! when adding fractions) before any pseudo-division is attempted.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use super::poly::{Coeff, Monomial, Poly};

const PRIME: u64 = (1 << 61) - 1;

/// Greatest common divisor, normalized to coprime integer coefficients with a
/// positive leading coefficient. `gcd(0, 0) = 0`.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    let n = a.nvars();
    if a.is_zero() {
        return b.primitive();
    }
    if b.is_zero() {
        return a.primitive();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one(n);
    }
    let a = a.primitive();
    let b = b.primitive();
    if a == b {
        return a;
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let m = ma.meet(&mb);
    let a = a.div_monomial(&ma);
    let b = b.div_monomial(&mb);
    let g = gcd_rec(a, b);
    if m.is_one() {
        g
    } else {
        g.mul_term(&m, &Coeff::one())
    }
}

/// gcd of a list, stopping as soon as the running gcd is constant.
pub fn gcd_many<'a, I: IntoIterator<Item = &'a Poly>>(nvars: usize, items: I) -> Poly {
    let mut items: Vec<&Poly> = items.into_iter().filter(|p| !p.is_zero()).collect();
    items.sort_by_key(|p| p.len());
    let mut acc = match items.first() {
        Some(p) => p.primitive(),
        None => return Poly::zero(nvars),
    };
    for p in &items[1..] {
        if acc.is_one() {
            break;
        }
        acc = gcd(&acc, p);
    }
    acc
}

fn content_in(p: &Poly, var: usize) -> Poly {
    let coeffs = p.coefficients_in(var);
    gcd_many(p.nvars(), coeffs.iter())
}

fn gcd_rec(mut a: Poly, mut b: Poly) -> Poly {
    let n = a.nvars();
    loop {
        if a.is_constant() || b.is_constant() {
            return Poly::one(n);
        }
        if a == b {
            return a.primitive();
        }
        let (ma, mb) = (a.var_mask(), b.var_mask());
        let common = ma & mb;
        if common == 0 {
            return Poly::one(n);
        }
        // A common factor cannot involve variables present in only one argument.
        let only_a = ma & !mb;
        let only_b = mb & !ma;
        if only_a != 0 {
            let v = only_a.trailing_zeros() as usize;
            a = content_in(&a, v);
            continue;
        }
        if only_b != 0 {
            let v = only_b.trailing_zeros() as usize;
            b = content_in(&b, v);
            continue;
        }
        break;
    }
    let common = a.var_mask();
    let main = (0..n)
        .filter(|v| common & (1 << v) != 0)
        .min_by_key(|&v| (a.degree_in(v).max(b.degree_in(v)), v))
        .expect("nonconstant polynomials share a variable");

    let ca = content_in(&a, main);
    let cb = content_in(&b, main);
    let c = gcd(&ca, &cb);
    if image_gcd_is_trivial(&a, &b, main) {
        return c;
    }
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");
    let g = primitive_prs(pa, pb, main);
    let out = c.mul(&g);
    out.primitive()
}

/// Primitive polynomial remainder sequence in `var`; both inputs primitive in `var`.
fn primitive_prs(a: Poly, b: Poly, var: usize) -> Poly {
    let (mut r0, mut r1) = if a.degree_in(var) >= b.degree_in(var) { (a, b) } else { (b, a) };
    loop {
        if r1.degree_in(var) == 0 {
            return Poly::one(r0.nvars());
        }
        let r = pseudo_remainder(&r0, &r1, var);
        if r.is_zero() {
            return r1.primitive();
        }
        if r.degree_in(var) == 0 {
            return Poly::one(r0.nvars());
        }
        let cr = content_in(&r, var);
        let r = r.div_exact(&cr).expect("content divides");
        r0 = r1;
        r1 = r.primitive();
    }
}

fn pseudo_remainder(a: &Poly, b: &Poly, var: usize) -> Poly {
    let n = a.nvars();
    let db = b.degree_in(var);
    let lb = b.lc_in(var);
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(var) >= db {
        let dr = r.degree_in(var);
        let lr = r.lc_in(var);
        let shift = Monomial::var(n, var, dr - db);
        let sub = b.mul(&lr).mul_term(&shift, &Coeff::one());
        r = r.mul(&lb).sub(&sub);
    }
    r
}

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % PRIME as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    acc
}

fn invmod(a: u64) -> u64 {
    powmod(a, PRIME - 2)
}

fn int_mod(x: &BigInt) -> u64 {
    let p = BigInt::from(PRIME);
    x.mod_floor(&p).to_u64().expect("reduced below the prime")
}

fn coeff_mod(c: &Coeff) -> Option<u64> {
    let d = int_mod(c.denom());
    if d == 0 {
        return None;
    }
    Some(mulmod(int_mod(c.numer()), invmod(d)))
}

/// splitmix64, used to derive reproducible evaluation points.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn image(p: &Poly, var: usize, point: &[u64]) -> Option<Vec<u64>> {
    let deg = p.degree_in(var) as usize;
    let mut uni = vec![0u64; deg + 1];
    for (m, c) in p.terms() {
        let mut v = coeff_mod(c)?;
        for (i, &e) in m.exps().iter().enumerate() {
            if i != var && e > 0 {
                v = mulmod(v, powmod(point[i], e as u64));
            }
        }
        let k = m.exp(var) as usize;
        uni[k] = (uni[k] + v) % PRIME;
    }
    Some(uni)
}

fn trim(p: &mut Vec<u64>) {
    while p.len() > 1 && *p.last().unwrap() == 0 {
        p.pop();
    }
}

fn uni_rem(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let inv = invmod(b[db]);
    while r.len() > db && !(r.len() == 1 && r[0] == 0) {
        let dr = r.len() - 1;
        let f = mulmod(r[dr], inv);
        for i in 0..=db {
            let t = mulmod(f, b[i]);
            r[dr - db + i] = (r[dr - db + i] + PRIME - t) % PRIME;
        }
        r.pop();
        trim(&mut r);
        if r.is_empty() {
            r.push(0);
        }
    }
    trim(&mut r);
    r
}

fn uni_gcd_degree(mut a: Vec<u64>, mut b: Vec<u64>) -> usize {
    trim(&mut a);
    trim(&mut b);
    while !(b.len() == 1 && b[0] == 0) {
        let r = uni_rem(&a, &b);
        a = b;
        b = r;
    }
    a.len() - 1
}

/// True only if the gcd provably has degree zero in `var`: the images keep
/// their degree in `var`, so the image gcd bounds the true degree from above.
fn image_gcd_is_trivial(a: &Poly, b: &Poly, var: usize) -> bool {
    let n = a.nvars();
    let (da, db) = (a.degree_in(var) as usize, b.degree_in(var) as usize);
    for attempt in 0..3u64 {
        let point: Vec<u64> = (0..n)
            .map(|i| mix((attempt << 32) ^ (i as u64) ^ 0x5eed) % PRIME)
            .collect();
        let (ia, ib) = match (image(a, var, &point), image(b, var, &point)) {
            (Some(x), Some(y)) => (x, y),
            _ => return false,
        };
        if ia[da] == 0 || ib[db] == 0 {
            continue;
        }
        return uni_gcd_degree(ia, ib) == 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(n: usize) -> Vec<Poly> {
        (0..n).map(|i| Poly::var(n, i)).collect()
    }

    #[test]
    fn gcd_recovers_common_factor() {
        let v = vars(3);
        let (x, y, z) = (&v[0], &v[1], &v[2]);
        let g = x.mul(y).sub(z).add(&Poly::from_int(3, 2));
        let a = g.mul(&x.add(&z.pow(2)));
        let b = g.mul(&y.sub(x)).mul(&g);
        assert_eq!(gcd(&a, &b), g.primitive());
    }

    #[test]
    fn gcd_of_coprime_is_one() {
        let v = vars(2);
        let a = v[0].pow(2).sub(&v[1]);
        let b = v[0].add(&v[1]);
        assert!(gcd(&a, &b).is_one());
    }

    #[test]
    fn gcd_handles_monomial_content_and_one_sided_vars() {
        let v = vars(3);
        let (x, y, z) = (&v[0], &v[1], &v[2]);
        let a = x.pow(2).mul(&y.add(z)).mul(z);
        let b = x.mul(&y.add(z)).mul(&y.add(&Poly::one(3)));
        assert_eq!(gcd(&a, &b), x.mul(&y.add(z)));
        // z occurs only in the first argument
        let c = x.sub(y).mul(&z.add(x));
        let d = x.sub(y).pow(2);
        assert_eq!(gcd(&c, &d), x.sub(y));
    }

    #[test]
    fn gcd_normalizes_sign() {
        let v = vars(2);
        let a = v[1].sub(&v[0]).scale(&Coeff::from_integer(BigInt::from(-3)));
        let g = gcd(&a, &a.mul(&v[0]));
        assert_eq!(g, v[0].sub(&v[1]));
    }
}
