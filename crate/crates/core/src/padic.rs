//! Precision-tracked arithmetic in Q_p and in its unramified quadratic
//! extension Q_p(α), α² = d.
//!
//! A nonzero [`Padic`] is stored as `p^v · u` where `u` is a unit known modulo
//! `p^n`; its absolute precision is `v + n`. Zero comes in two flavours: the
//! exact zero and `O(p^k)`, a value indistinguishable from zero at absolute
//! precision `k`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

thread_local! {
    static POWERS: RefCell<HashMap<(u64, u32), BigUint>> = RefCell::new(HashMap::new());
}

/// `p^n`, memoised per thread.
pub fn pow_p(p: u64, n: u32) -> BigUint {
    POWERS.with(|cache| {
        cache
            .borrow_mut()
            .entry((p, n))
            .or_insert_with(|| BigUint::from(p).pow(n))
            .clone()
    })
}

fn val_big(p: u64, x: &BigUint) -> (u32, BigUint) {
    let pb = BigUint::from(p);
    let mut x = x.clone();
    let mut v = 0;
    loop {
        let (q, r) = x.div_rem(&pb);
        if !r.is_zero() {
            return (v, x);
        }
        x = q;
        v += 1;
    }
}

/// Inverse of a unit modulo `p^n` by Newton iteration from the residue mod p.
pub fn inv_mod_pn(u: &BigUint, p: u64, n: u32) -> BigUint {
    let r = (u % p).to_u64().unwrap();
    debug_assert!(r != 0, "inverse of a non-unit");
    let mut x = BigUint::from(mod_pow_small(r, p - 2, p));
    let mut k = 1u32;
    while k < n {
        k = (2 * k).min(n);
        let m = pow_p(p, k);
        let ux = (u * &x) % &m;
        // x <- x(2 - ux)
        let two_minus = (BigUint::from(2u32) + &m - ux) % &m;
        x = (x * two_minus) % &m;
    }
    x % pow_p(p, n)
}

fn mod_pow_small(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    r
}

/// Smallest positive quadratic non-residue mod p, except that p ≡ 3 (mod 4)
/// always uses −1.
pub fn canonical_nonresidue(p: u64) -> i64 {
    assert!(p > 2 && p % 2 == 1, "odd prime required");
    if p % 4 == 3 {
        return -1;
    }
    (2..p)
        .find(|&a| mod_pow_small(a, (p - 1) / 2, p) == p - 1)
        .map(|a| a as i64)
        .expect("a non-residue exists")
}

/// Legendre-style residue test on a unit residue `r` mod p.
pub fn is_residue_mod_p(r: u64, p: u64) -> bool {
    mod_pow_small(r % p, (p - 1) / 2, p) == 1
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Zero(Option<i64>),
    Val { v: i64, u: BigUint, n: u32 },
}

/// An element of Q_p with tracked absolute precision.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Padic {
    p: u64,
    repr: Repr,
}

impl Padic {
    pub fn zero(p: u64) -> Self {
        Padic { p, repr: Repr::Zero(None) }
    }

    /// `O(p^abs)`.
    pub fn zero_to(p: u64, abs: i64) -> Self {
        Padic { p, repr: Repr::Zero(Some(abs)) }
    }

    pub fn one(p: u64, n: u32) -> Self {
        Self::from_i64(p, 1, n)
    }

    /// Builds `p^v · s` known modulo `p^(abs)`, normalising the unit part.
    fn normalize(p: u64, v: i64, s: BigUint, abs: i64) -> Self {
        if abs <= v {
            return Self::zero_to(p, abs);
        }
        let s = s % pow_p(p, (abs - v) as u32);
        if s.is_zero() {
            return Self::zero_to(p, abs);
        }
        let (t, u) = val_big(p, &s);
        let v = v + t as i64;
        Padic { p, repr: Repr::Val { v, u, n: (abs - v) as u32 } }
    }

    /// `p^v · u` with `n` digits of relative precision; `u` need not be a unit.
    pub fn from_parts(p: u64, v: i64, u: &BigInt, n: u32) -> Self {
        if u.is_zero() {
            return Self::zero(p);
        }
        let (t, w) = val_big(p, u.magnitude());
        let m = pow_p(p, n);
        let mut w = w % &m;
        if u.sign() == Sign::Minus {
            w = (&m - w) % &m;
        }
        Padic { p, repr: Repr::Val { v: v + t as i64, u: w, n } }
    }

    pub fn from_i64(p: u64, x: i64, n: u32) -> Self {
        Self::from_parts(p, 0, &BigInt::from(x), n)
    }

    pub fn from_bigint(p: u64, x: &BigInt, n: u32) -> Self {
        Self::from_parts(p, 0, x, n)
    }

    /// Embeds a rational number with `n` digits of relative precision.
    pub fn from_rational(p: u64, x: &BigRational, n: u32) -> Self {
        if x.is_zero() {
            return Self::zero(p);
        }
        let (vd, d) = val_big(p, x.denom().magnitude());
        let num = Self::from_parts(p, 0, x.numer(), n);
        let Repr::Val { v, u, .. } = num.repr else { unreachable!() };
        let m = pow_p(p, n);
        let mut w = (u * inv_mod_pn(&d, p, n)) % &m;
        if x.denom().sign() == Sign::Minus {
            w = (&m - w) % &m;
        }
        Padic { p, repr: Repr::Val { v: v - vd as i64, u: w, n } }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Valuation of a nonzero value; `None` for both kinds of zero.
    pub fn valuation(&self) -> Option<i64> {
        match &self.repr {
            Repr::Val { v, .. } => Some(*v),
            Repr::Zero(_) => None,
        }
    }

    /// Lower bound for the valuation: the valuation itself, the absolute
    /// precision of an inexact zero, or `i64::MAX` for exact zero.
    pub fn valuation_bound(&self) -> i64 {
        match &self.repr {
            Repr::Val { v, .. } => *v,
            Repr::Zero(Some(k)) => *k,
            Repr::Zero(None) => i64::MAX,
        }
    }

    /// Absolute precision; `None` for the exact zero.
    pub fn abs_prec(&self) -> Option<i64> {
        match &self.repr {
            Repr::Val { v, n, .. } => Some(v + *n as i64),
            Repr::Zero(k) => *k,
        }
    }

    pub fn rel_prec(&self) -> Option<u32> {
        match &self.repr {
            Repr::Val { n, .. } => Some(*n),
            Repr::Zero(_) => None,
        }
    }

    pub fn unit(&self) -> Option<&BigUint> {
        match &self.repr {
            Repr::Val { u, .. } => Some(u),
            Repr::Zero(_) => None,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero(None))
    }

    /// True for exact zero and for `O(p^k)`.
    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero(_))
    }

    /// Leading unit digit, in `1..p`.
    pub fn leading_digit(&self) -> Option<u64> {
        self.unit().map(|u| (u % self.p).to_u64().unwrap())
    }

    fn check_prime(&self, other: &Padic) {
        assert_eq!(self.p, other.p, "mixing p-adic numbers of different primes");
    }

    /// Truncates to absolute precision at most `k`.
    pub fn cap_abs(&self, k: i64) -> Padic {
        match &self.repr {
            Repr::Zero(None) => Self::zero_to(self.p, k),
            Repr::Zero(Some(a)) => Self::zero_to(self.p, (*a).min(k)),
            Repr::Val { v, u, n } => {
                let abs = (v + *n as i64).min(k);
                Self::normalize(self.p, *v, u.clone(), abs)
            }
        }
    }

    /// Truncates to relative precision at most `n`.
    pub fn cap_rel(&self, n: u32) -> Padic {
        match &self.repr {
            Repr::Val { v, u, n: m } if *m > n => {
                Self::normalize(self.p, *v, u.clone(), v + n as i64)
            }
            _ => self.clone(),
        }
    }

    /// An exact-enough integer constant: its precision never limits a binary
    /// operation with `self`.
    pub fn constant_like(&self, k: i64) -> Padic {
        let n = match &self.repr {
            Repr::Val { v, n, .. } => (*n as i64 + v.abs() + 2) as u32,
            Repr::Zero(Some(a)) => (a.abs() + 2) as u32,
            Repr::Zero(None) => 64,
        };
        Self::from_i64(self.p, k, n)
    }

    pub fn rational_like(&self, x: &BigRational) -> Padic {
        let n = match &self.repr {
            Repr::Val { v, n, .. } => (*n as i64 + v.abs() + 2) as u32,
            Repr::Zero(Some(a)) => (a.abs() + 2) as u32,
            Repr::Zero(None) => 64,
        };
        let extra = x.numer().bits().max(x.denom().bits()) as u32;
        Self::from_rational(self.p, x, n + extra)
    }

    pub fn add(&self, other: &Padic) -> Padic {
        self.check_prime(other);
        match (&self.repr, &other.repr) {
            (Repr::Zero(None), _) => other.clone(),
            (_, Repr::Zero(None)) => self.clone(),
            (Repr::Zero(Some(a)), _) => other.cap_abs(*a),
            (_, Repr::Zero(Some(b))) => self.cap_abs(*b),
            (Repr::Val { v: v1, u: u1, n: n1 }, Repr::Val { v: v2, u: u2, n: n2 }) => {
                let abs = (v1 + *n1 as i64).min(v2 + *n2 as i64);
                let v = (*v1).min(*v2);
                if abs <= v {
                    return Self::zero_to(self.p, abs);
                }
                let s = u1 * pow_p(self.p, (v1 - v) as u32) + u2 * pow_p(self.p, (v2 - v) as u32);
                Self::normalize(self.p, v, s, abs)
            }
        }
    }

    pub fn neg(&self) -> Padic {
        match &self.repr {
            Repr::Val { v, u, n } => {
                let m = pow_p(self.p, *n);
                Padic { p: self.p, repr: Repr::Val { v: *v, u: (&m - u) % &m, n: *n } }
            }
            _ => self.clone(),
        }
    }

    pub fn sub(&self, other: &Padic) -> Padic {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Padic) -> Padic {
        self.check_prime(other);
        match (&self.repr, &other.repr) {
            (Repr::Zero(None), _) | (_, Repr::Zero(None)) => Self::zero(self.p),
            (Repr::Zero(Some(a)), Repr::Zero(Some(b))) => Self::zero_to(self.p, a + b),
            (Repr::Zero(Some(a)), Repr::Val { v, .. }) | (Repr::Val { v, .. }, Repr::Zero(Some(a))) => {
                Self::zero_to(self.p, a + v)
            }
            (Repr::Val { v: v1, u: u1, n: n1 }, Repr::Val { v: v2, u: u2, n: n2 }) => {
                let n = (*n1).min(*n2);
                let u = (u1 * u2) % pow_p(self.p, n);
                Padic { p: self.p, repr: Repr::Val { v: v1 + v2, u, n } }
            }
        }
    }

    pub fn inv(&self) -> Result<Padic> {
        match &self.repr {
            Repr::Val { v, u, n } => Ok(Padic {
                p: self.p,
                repr: Repr::Val { v: -v, u: inv_mod_pn(u, self.p, *n), n: *n },
            }),
            _ => Err(Error::InsufficientPrecision(format!(
                "division by a value indistinguishable from zero ({self})"
            ))),
        }
    }

    pub fn div(&self, other: &Padic) -> Result<Padic> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn mul_int(&self, k: i64) -> Padic {
        self.mul(&self.constant_like(k))
    }

    pub fn div_int(&self, k: i64) -> Result<Padic> {
        self.div(&self.constant_like(k))
    }

    pub fn pow(&self, e: u64) -> Padic {
        let mut result = self.constant_like(1);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Multiplies by `p^k` exactly.
    pub fn shift(&self, k: i64) -> Padic {
        match &self.repr {
            Repr::Val { v, u, n } => Padic { p: self.p, repr: Repr::Val { v: v + k, u: u.clone(), n: *n } },
            Repr::Zero(Some(a)) => Self::zero_to(self.p, a + k),
            Repr::Zero(None) => self.clone(),
        }
    }

    /// The finite expansion `Σ c_i p^i` as an exact rational.
    pub fn to_rational(&self) -> BigRational {
        match &self.repr {
            Repr::Val { v, u, .. } => {
                let u = BigInt::from(u.clone());
                if *v >= 0 {
                    BigRational::from_integer(u * BigInt::from(pow_p(self.p, *v as u32)))
                } else {
                    BigRational::new(u, BigInt::from(pow_p(self.p, (-v) as u32)))
                }
            }
            _ => BigRational::zero(),
        }
    }

    /// Value modulo `p^k` as an integer in `[0, p^k)`. Requires an integral
    /// value known to absolute precision at least `k`.
    pub fn residue(&self, k: u32) -> Result<BigUint> {
        if let Some(a) = self.abs_prec() {
            if a < k as i64 {
                return Err(Error::InsufficientPrecision(format!(
                    "residue mod {}^{k} of a value known to O({}^{a})",
                    self.p, self.p
                )));
            }
        }
        match &self.repr {
            Repr::Val { v, u, .. } => {
                if *v < 0 {
                    return Err(Error::InsufficientPrecision(format!("residue of non-integral value {self}")));
                }
                if *v >= k as i64 {
                    return Ok(BigUint::zero());
                }
                Ok((u * pow_p(self.p, *v as u32)) % pow_p(self.p, k))
            }
            _ => Ok(BigUint::zero()),
        }
    }

    /// Digits `(exponent, coefficient)` with nonzero coefficient, from the
    /// valuation up to the absolute precision.
    pub fn digits(&self) -> Vec<(i64, u64)> {
        let mut out = Vec::new();
        if let Repr::Val { v, u, n } = &self.repr {
            let pb = BigUint::from(self.p);
            let mut u = u.clone();
            for i in 0..*n {
                let (q, r) = u.div_rem(&pb);
                let r = r.to_u64().unwrap();
                if r != 0 {
                    out.push((v + i as i64, r));
                }
                u = q;
            }
        }
        out
    }

    /// Number of leading digits on which `self` and `other` agree, as an
    /// absolute exponent: the valuation of the difference, or its absolute
    /// precision when the difference is indistinguishable from zero.
    pub fn agreement(&self, other: &Padic) -> i64 {
        self.sub(other).valuation_bound()
    }

    /// Parses the digit-string format produced by `Display`.
    pub fn parse(s: &str, p: u64) -> Result<Padic> {
        let s = s.trim();
        if s == "0" {
            return Ok(Padic::zero(p));
        }
        let mut terms: Vec<(i64, u64)> = Vec::new();
        let mut big_o = None;
        for raw in s.split(" + ") {
            let t = raw.trim();
            if let Some(inner) = t.strip_prefix("O(").and_then(|r| r.strip_suffix(')')) {
                let (q, e) = parse_power(inner)?;
                if q != p {
                    return Err(Error::Parse(format!("prime mismatch in {t}")));
                }
                big_o = Some(e);
                continue;
            }
            let (coef, pow) = match t.split_once('·') {
                Some((c, rest)) => (parse_u64(c)?, Some(rest)),
                None if t.chars().all(|c| c.is_ascii_digit()) && t != p.to_string() => (parse_u64(t)?, None),
                None => (1, Some(t)),
            };
            let e = match pow {
                None => 0,
                Some(pw) => {
                    let (q, e) = parse_power(pw)?;
                    if q != p {
                        return Err(Error::Parse(format!("prime mismatch in {t}")));
                    }
                    e
                }
            };
            if coef == 0 || coef >= p {
                return Err(Error::Parse(format!("digit {coef} out of range in {t}")));
            }
            terms.push((e, coef));
        }
        let Some(abs) = big_o else {
            return Err(Error::Parse(format!("missing O(p^k) term in {s}")));
        };
        let Some(&(v, _)) = terms.first() else {
            return Ok(Padic::zero_to(p, abs));
        };
        let mut u = BigUint::zero();
        for (e, c) in &terms {
            if *e < v || *e >= abs {
                return Err(Error::Parse(format!("term exponent {e} out of order")));
            }
            u += BigUint::from(*c) * pow_p(p, (e - v) as u32);
        }
        Ok(Padic::normalize(p, v, u, abs))
    }
}

fn parse_u64(s: &str) -> Result<u64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad integer {s:?}")))
}

const SUPERSCRIPTS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];

fn superscript(e: i64) -> String {
    let mut s = String::new();
    if e < 0 {
        s.push('⁻');
    }
    for ch in e.unsigned_abs().to_string().chars() {
        s.push(SUPERSCRIPTS[ch.to_digit(10).unwrap() as usize]);
    }
    s
}

/// Parses `p` or `p` followed by a superscript exponent.
fn parse_power(s: &str) -> Result<(u64, i64)> {
    let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let (base, sup) = s.split_at(split);
    let p = parse_u64(base)?;
    if sup.is_empty() {
        return Ok((p, 1));
    }
    if let Some(ascii) = sup.strip_prefix('^') {
        let e = ascii.parse().map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
        return Ok((p, e));
    }
    let mut neg = false;
    let mut e: i64 = 0;
    for ch in sup.chars() {
        if ch == '⁻' {
            neg = true;
        } else if let Some(d) = SUPERSCRIPTS.iter().position(|&c| c == ch) {
            e = e * 10 + d as i64;
        } else {
            return Err(Error::Parse(format!("bad exponent in {s:?}")));
        }
    }
    Ok((p, if neg { -e } else { e }))
}

fn power_string(p: u64, e: i64) -> String {
    match e {
        1 => p.to_string(),
        _ => format!("{p}{}", superscript(e)),
    }
}

impl fmt::Display for Padic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let abs = match &self.repr {
            Repr::Zero(None) => return write!(f, "0"),
            Repr::Zero(Some(k)) => *k,
            Repr::Val { v, n, .. } => v + *n as i64,
        };
        let mut parts: Vec<String> = self
            .digits()
            .into_iter()
            .map(|(e, c)| match (e, c) {
                (0, c) => c.to_string(),
                (e, 1) => power_string(self.p, e),
                (e, c) => format!("{c}·{}", power_string(self.p, e)),
            })
            .collect();
        parts.push(format!("O({})", power_string(self.p, abs)));
        write!(f, "{}", parts.join(" + "))
    }
}

/// `a + b·α` with `α² = d` for a fixed non-residue `d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadExt {
    a: Padic,
    b: Padic,
    d: i64,
}

impl QuadExt {
    pub fn new(a: Padic, b: Padic, d: i64) -> Self {
        a.check_prime(&b);
        QuadExt { a, b, d }
    }

    pub fn from_base(a: Padic) -> Self {
        let p = a.p;
        QuadExt { a, b: Padic::zero(p), d: canonical_nonresidue(p) }
    }

    /// α itself, with `n` digits of precision.
    pub fn alpha(p: u64, n: u32) -> Self {
        QuadExt { a: Padic::zero(p), b: Padic::one(p, n), d: canonical_nonresidue(p) }
    }

    pub fn a(&self) -> &Padic {
        &self.a
    }

    pub fn b(&self) -> &Padic {
        &self.b
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn prime(&self) -> u64 {
        self.a.p
    }

    /// Square root of a base element: in Q_p when it is a square there, and
    /// of the form `s·α` otherwise. Both use the canonical root rule.
    pub fn sqrt_of_base(x: &Padic) -> Result<QuadExt> {
        let d = canonical_nonresidue(x.p);
        match hensel_sqrt(x) {
            Ok(r) => Ok(QuadExt { a: r, b: Padic::zero(x.p), d }),
            Err(Error::NotASquare(_)) => {
                let s = hensel_sqrt(&x.div(&x.constant_like(d))?)?;
                Ok(QuadExt { a: Padic::zero(x.p), b: s, d })
            }
            Err(e) => Err(e),
        }
    }

    pub fn valuation(&self) -> Option<i64> {
        match (self.a.valuation(), self.b.valuation()) {
            (None, None) => None,
            (Some(x), None) => Some(x),
            (None, Some(y)) => Some(y),
            (Some(x), Some(y)) => Some(x.min(y)),
        }
    }

    pub fn valuation_bound(&self) -> i64 {
        self.a.valuation_bound().min(self.b.valuation_bound())
    }

    pub fn abs_prec(&self) -> Option<i64> {
        match (self.a.abs_prec(), self.b.abs_prec()) {
            (None, None) => None,
            (Some(x), None) | (None, Some(x)) => Some(x),
            (Some(x), Some(y)) => Some(x.min(y)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn cap_abs(&self, k: i64) -> QuadExt {
        QuadExt { a: self.a.cap_abs(k), b: self.b.cap_abs(k), d: self.d }
    }

    pub fn add(&self, o: &QuadExt) -> QuadExt {
        QuadExt { a: self.a.add(&o.a), b: self.b.add(&o.b), d: self.d }
    }

    pub fn sub(&self, o: &QuadExt) -> QuadExt {
        QuadExt { a: self.a.sub(&o.a), b: self.b.sub(&o.b), d: self.d }
    }

    pub fn neg(&self) -> QuadExt {
        QuadExt { a: self.a.neg(), b: self.b.neg(), d: self.d }
    }

    pub fn mul(&self, o: &QuadExt) -> QuadExt {
        let bb = self.b.mul(&o.b);
        let a = self.a.mul(&o.a).add(&bb.mul(&bb.constant_like(self.d)));
        let b = self.a.mul(&o.b).add(&self.b.mul(&o.a));
        QuadExt { a, b, d: self.d }
    }

    pub fn scale(&self, k: &Padic) -> QuadExt {
        QuadExt { a: self.a.mul(k), b: self.b.mul(k), d: self.d }
    }

    pub fn mul_int(&self, k: i64) -> QuadExt {
        QuadExt { a: self.a.mul_int(k), b: self.b.mul_int(k), d: self.d }
    }

    pub fn norm(&self) -> Padic {
        let bb = self.b.mul(&self.b);
        self.a.mul(&self.a).sub(&bb.mul(&bb.constant_like(self.d)))
    }

    pub fn frobenius(&self) -> QuadExt {
        QuadExt { a: self.a.clone(), b: self.b.neg(), d: self.d }
    }

    pub fn inv(&self) -> Result<QuadExt> {
        let n = self.norm().inv()?;
        Ok(QuadExt { a: self.a.mul(&n), b: self.b.neg().mul(&n), d: self.d })
    }

    pub fn div(&self, o: &QuadExt) -> Result<QuadExt> {
        Ok(self.mul(&o.inv()?))
    }

    /// The multiplicative identity with precision at least that of `self`.
    pub fn one_like(&self) -> QuadExt {
        let p = self.prime();
        let n = [&self.a, &self.b]
            .iter()
            .map(|x| x.constant_like(1).rel_prec().unwrap())
            .max()
            .unwrap();
        QuadExt { a: Padic::one(p, n), b: Padic::zero(p), d: self.d }
    }

    pub fn pow(&self, e: u64) -> QuadExt {
        let mut result = self.one_like();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Multiplies by `p^k` exactly.
    pub fn shift(&self, k: i64) -> QuadExt {
        QuadExt { a: self.a.shift(k), b: self.b.shift(k), d: self.d }
    }

    /// Minimum digit agreement over both coordinates.
    pub fn agreement(&self, o: &QuadExt) -> i64 {
        self.a.agreement(&o.a).min(self.b.agreement(&o.b))
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) + ({})·α", self.a, self.b)
    }
}

/// Canonical square root in Q_p: the root whose leading unit digit lies in
/// `1..=(p-1)/2`.
pub fn hensel_sqrt(x: &Padic) -> Result<Padic> {
    let p = x.p;
    let Repr::Val { v, u, n } = &x.repr else {
        return Err(Error::InsufficientPrecision(format!("square root of {x}")));
    };
    if v % 2 != 0 {
        return Err(Error::NotASquare(format!("odd valuation {v}")));
    }
    let r0 = (u % p).to_u64().unwrap();
    let Some(s0) = (1..=(p - 1) / 2).find(|s| s * s % p == r0) else {
        return Err(Error::NotASquare(format!("unit residue {r0} mod {p}")));
    };
    let mut r = BigUint::from(s0);
    let two_inv = |m: u32| inv_mod_pn(&BigUint::from(2u32), p, m);
    let mut k = 1u32;
    while k < *n {
        k = (2 * k).min(*n);
        let m = pow_p(p, k);
        let t = (&r + (u % &m) * inv_mod_pn(&r, p, k)) % &m;
        r = (t * two_inv(k)) % &m;
    }
    Ok(Padic { p, repr: Repr::Val { v: v / 2, u: r, n: *n } })
}

fn floor_log(p: u64, k: u64) -> i64 {
    let mut e = 0;
    let mut t = k;
    while t >= p {
        t /= p;
        e += 1;
    }
    e
}

/// `log(1 + z)` for `v(z) ≥ 1`, summed until the tail bound
/// `k·v(z) − floor(log_p k)` reaches the absolute precision of `z`.
fn log1p(z: &QuadExt) -> QuadExt {
    let p = z.prime();
    let zero = QuadExt { a: Padic::zero(p), b: Padic::zero(p), d: z.d };
    let Some(vz) = z.valuation() else {
        return match z.abs_prec() {
            None => zero,
            Some(k) => zero.cap_abs(k),
        };
    };
    debug_assert!(vz >= 1);
    let target = z.abs_prec().expect("nonzero values have finite precision");
    let mut sum = zero;
    let mut zk = z.clone();
    let mut k: u64 = 1;
    while (k as i64) * vz - floor_log(p, k) < target {
        let term = QuadExt {
            a: zk.a.div_int(k as i64).unwrap(),
            b: zk.b.div_int(k as i64).unwrap(),
            d: z.d,
        };
        sum = if k % 2 == 1 { sum.add(&term) } else { sum.sub(&term) };
        zk = zk.mul(z);
        k += 1;
    }
    sum.cap_abs(target)
}

/// Iwasawa logarithm on the quadratic extension: `log(p) = 0` and
/// `log(ζ) = 0` for roots of unity.
pub fn iwasawa_log_ext(x: &QuadExt) -> Result<QuadExt> {
    let Some(v) = x.valuation() else {
        return Err(Error::InsufficientPrecision(format!("logarithm of zero ({x})")));
    };
    let p = x.prime();
    let y = x.shift(-v);
    let e = p * p - 1;
    let z = y.pow(e).sub(&y.one_like());
    let l = log1p(&z);
    Ok(QuadExt { a: l.a.div_int(e as i64)?, b: l.b.div_int(e as i64)?, d: x.d })
}

/// Iwasawa logarithm on Q_p.
pub fn iwasawa_log(x: &Padic) -> Result<Padic> {
    Ok(iwasawa_log_ext(&QuadExt::from_base(x.clone()))?.a)
}

/// The branch of the logarithm killing `q^Z`:
/// `log(x) − (v(x)/v(q))·log(q)`.
pub fn log_q(x: &QuadExt, q: &Padic) -> Result<QuadExt> {
    let vq = match q.valuation() {
        Some(vq) if vq > 0 => vq,
        _ => return Err(Error::InvalidPeriod(format!("v(q) must be positive, got {q}"))),
    };
    let lx = iwasawa_log_ext(x)?;
    let vx = x.valuation().unwrap();
    if vx == 0 {
        return Ok(lx);
    }
    let lq = iwasawa_log(q)?;
    let ratio = lq.rational_like(&BigRational::new(BigInt::from(vx), BigInt::from(vq)));
    Ok(QuadExt { a: lx.a.sub(&lq.mul(&ratio)), b: lx.b.clone(), d: lx.d })
}

impl Padic {
    /// Sign-aware conversion of a small integral value, for tests and
    /// rendering of residues.
    pub fn to_i128_centered(&self, k: u32) -> Result<i128> {
        let r = self.residue(k)?;
        let m = pow_p(self.p, k);
        let r = BigInt::from(r);
        let m = BigInt::from(m);
        let c = if &r * 2 > m { r - m } else { r };
        c.to_i128().ok_or_else(|| Error::InsufficientPrecision("value too large".into()))
    }

}

#[cfg(test)]
mod tests {
    use super::*;

    fn q3(x: i64) -> Padic {
        Padic::from_i64(3, x, 20)
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn inverse_of_four_mod_27() {
        let x = q3(4).inv().unwrap();
        assert_eq!(x.residue(3).unwrap(), BigUint::from(7u32));
    }

    #[test]
    fn sixteen_digits() {
        let x = q3(4).mul(&q3(4));
        assert_eq!(x.digits(), vec![(0, 1), (1, 2), (2, 1)]);
    }

    #[test]
    fn multiplicative_identity() {
        let x = Padic::from_rational(3, &r(-17, 45), 12);
        assert_eq!(x.mul(&x.constant_like(1)), x);
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(hensel_sqrt(&q3(1)).unwrap().residue(5).unwrap(), BigUint::from(1u32));
        assert_eq!(hensel_sqrt(&q3(7)).unwrap().residue(2).unwrap(), BigUint::from(4u32));
        assert_eq!(hensel_sqrt(&q3(37)).unwrap().residue(3).unwrap(), BigUint::from(19u32));
        assert!(matches!(hensel_sqrt(&q3(2)), Err(Error::NotASquare(_))));
        assert!(matches!(hensel_sqrt(&q3(3)), Err(Error::NotASquare(_))));
        assert!(matches!(hensel_sqrt(&q3(18)), Err(Error::NotASquare(_))));
        assert!(matches!(hensel_sqrt(&q3(27)), Err(Error::NotASquare(_))));
        let s = hensel_sqrt(&q3(63)).unwrap();
        assert_eq!(s.mul(&s), q3(63));
        let s = hensel_sqrt(&q3(9 * 4)).unwrap();
        assert_eq!(s.valuation(), Some(1));
        assert_eq!(s.mul(&s), q3(36));
    }

    #[test]
    fn log_four_mod_27() {
        let l = iwasawa_log(&q3(4)).unwrap();
        assert_eq!(l.residue(3).unwrap(), BigUint::from(21u32));
    }

    #[test]
    fn log_of_one_and_of_p() {
        assert!(iwasawa_log(&q3(1)).unwrap().is_zero());
        assert!(iwasawa_log(&q3(3)).unwrap().is_zero());
        assert!(iwasawa_log(&q3(-1)).unwrap().is_zero());
    }

    #[test]
    fn log_q_kills_period() {
        let q = Padic::from_rational(3, &r(9 * 7, 4), 15);
        let lq = log_q(&QuadExt::from_base(q.clone()), &q).unwrap();
        assert!(lq.is_zero(), "{lq}");
        let u = QuadExt::new(q3(4), q3(3), -1);
        let lu = iwasawa_log_ext(&u).unwrap();
        assert_eq!(log_q(&u, &q).unwrap(), lu);
        let qu = u.scale(&q);
        assert!(log_q(&qu, &q).unwrap().agreement(&lu) >= 14);
        assert!(matches!(log_q(&u, &q3(2)), Err(Error::InvalidPeriod(_))));
    }

    #[test]
    fn frobenius_of_alpha() {
        let a = QuadExt::alpha(3, 10);
        assert_eq!(a.frobenius(), a.neg());
        let sq = a.mul(&a);
        assert_eq!(sq.a(), &Padic::from_i64(3, -1, 10));
        assert!(sq.b().is_zero());
    }

    #[test]
    fn nonresidues() {
        assert_eq!(canonical_nonresidue(3), -1);
        assert_eq!(canonical_nonresidue(5), 2);
        assert_eq!(canonical_nonresidue(13), 2);
        assert_eq!(canonical_nonresidue(17), 3);
        assert_eq!(canonical_nonresidue(7), -1);
    }

    #[test]
    fn rendering_uses_superscript_powers() {
        let x = Padic::from_i64(3, 2 * 9 + 729, 5);
        assert_eq!(x.to_string(), "2·3² + 3⁶ + O(3⁷)");
        let y = Padic::from_i64(3, 16, 3);
        assert_eq!(y.to_string(), "1 + 2·3 + 3² + O(3³)");
        assert_eq!(Padic::zero_to(3, 4).to_string(), "O(3⁴)");
        let z = Padic::from_rational(3, &r(1, 3), 2);
        assert_eq!(z.to_string(), "3⁻¹ + O(3)");
    }

    #[test]
    fn parse_round_trip() {
        for s in ["2·3² + 3⁶ + O(3⁷)", "1 + 2·3 + 3² + O(3³)", "O(3⁴)", "0", "3⁻¹ + 2 + O(3)", "2·5⁻³ + 4·5 + O(5²)"] {
            let p = if s.contains('5') { 5 } else { 3 };
            assert_eq!(Padic::parse(s, p).unwrap().to_string(), s);
        }
        assert!(Padic::parse("2·3² + 3⁶", 3).is_err());
        assert!(Padic::parse("4·3² + O(3⁵)", 3).is_err());
        assert_eq!(Padic::parse("2·3^2 + 3^6 + O(3^10)", 3).unwrap(), Padic::parse("2·3² + 3⁶ + O(3¹⁰)", 3).unwrap());
        assert_eq!(Padic::parse("3^-1 + O(3^2)", 3).unwrap().valuation(), Some(-1));
    }

    #[test]
    fn precision_propagation() {
        let a = Padic::from_i64(3, 1, 5);
        let b = Padic::from_i64(3, 1 + 243 * 2, 10);
        let d = a.sub(&b);
        assert_eq!(d, Padic::zero_to(3, 5));
        let c = Padic::from_i64(3, 9, 4);
        assert_eq!(c.abs_prec(), Some(6));
        assert_eq!(c.mul(&a).abs_prec(), Some(6));
        assert!(matches!(d.inv(), Err(Error::InsufficientPrecision(_))));
    }

    #[test]
    fn norm_lies_in_base() {
        let x = QuadExt::new(q3(5), q3(7), -1);
        assert_eq!(x.mul(&x.frobenius()).b().is_zero(), true);
        assert_eq!(x.norm(), q3(25 + 49));
    }

    #[test]
    fn sqrt_of_base_nonresidue() {
        let s = QuadExt::sqrt_of_base(&q3(2)).unwrap();
        assert!(s.a().is_zero());
        assert_eq!(s.mul(&s).a().agreement(&q3(2)), 20);
    }
}
