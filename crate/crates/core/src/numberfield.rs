//! Exact arithmetic in F = Q(√D) (basis 1, w = (1+√D)/2) and in E = F(√β),
//! with the two p-adic embeddings of F when p splits.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{hensel_sqrt, is_residue_mod_p, Padic, QuadExt};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `a + b·w` in Q(√D) with `w² = w + (D−1)/4`. `D ≡ 1 (mod 4)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    pub a: BigRational,
    pub b: BigRational,
    pub disc: i64,
}

impl FieldElement {
    pub fn new(a: BigRational, b: BigRational, disc: i64) -> Self {
        assert!(disc.rem_euclid(4) == 1, "discriminant must be 1 mod 4");
        FieldElement { a, b, disc }
    }

    pub fn from_ints(a: i64, b: i64, disc: i64) -> Self {
        Self::new(rat(a), rat(b), disc)
    }

    /// From the fixture's rational-pair syntax `[a_num, a_den, b_num, b_den]`.
    pub fn from_pairs(v: &[BigInt; 4], disc: i64) -> Result<Self> {
        if v[1].is_zero() || v[3].is_zero() {
            return Err(Error::Schema("zero denominator in field element".into()));
        }
        Ok(Self::new(
            BigRational::new(v[0].clone(), v[1].clone()),
            BigRational::new(v[2].clone(), v[3].clone()),
            disc,
        ))
    }

    pub fn to_pairs(&self) -> [BigInt; 4] {
        [self.a.numer().clone(), self.a.denom().clone(), self.b.numer().clone(), self.b.denom().clone()]
    }

    pub fn zero(disc: i64) -> Self {
        Self::from_ints(0, 0, disc)
    }

    pub fn one(disc: i64) -> Self {
        Self::from_ints(1, 0, disc)
    }

    pub fn w(disc: i64) -> Self {
        Self::from_ints(0, 1, disc)
    }

    pub fn from_rational(a: BigRational, disc: i64) -> Self {
        Self::new(a, BigRational::zero(), disc)
    }

    fn c(&self) -> BigRational {
        rat((self.disc - 1) / 4)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(&self.a + &o.a, &self.b + &o.b, self.disc)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(&self.a - &o.a, &self.b - &o.b, self.disc)
    }

    pub fn neg(&self) -> Self {
        Self::new(-&self.a, -&self.b, self.disc)
    }

    pub fn mul(&self, o: &Self) -> Self {
        // (a1 + b1 w)(a2 + b2 w) with w² = w + c
        let bb = &self.b * &o.b;
        let a = &self.a * &o.a + &bb * self.c();
        let b = &self.a * &o.b + &self.b * &o.a + bb;
        Self::new(a, b, self.disc)
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        Self::new(&self.a * k, &self.b * k, self.disc)
    }

    /// Galois conjugate: `w ↦ 1 − w`.
    pub fn conj(&self) -> Self {
        Self::new(&self.a + &self.b, -&self.b, self.disc)
    }

    pub fn norm(&self) -> BigRational {
        let x = self.mul(&self.conj());
        debug_assert!(x.b.is_zero());
        x.a
    }

    pub fn trace(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(2)) * &self.a + &self.b
    }

    pub fn inv(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::Parse("inverse of zero field element".into()));
        }
        Ok(self.conj().scale(&n.recip()))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut r = Self::one(self.disc);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    /// True when both coordinates are integers (the element lies in Z[w]).
    pub fn is_integral(&self) -> bool {
        self.a.is_integer() && self.b.is_integer()
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "({})w", self.b),
            (false, false) => write!(f, "{} + ({})w", self.a, self.b),
        }
    }
}

/// `x + y·√β` in E = F(√β).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EFieldElement {
    pub x: FieldElement,
    pub y: FieldElement,
    pub beta: FieldElement,
}

impl EFieldElement {
    pub fn new(x: FieldElement, y: FieldElement, beta: FieldElement) -> Self {
        EFieldElement { x, y, beta }
    }

    pub fn from_base(x: FieldElement, beta: &FieldElement) -> Self {
        let d = x.disc;
        EFieldElement { x, y: FieldElement::zero(d), beta: beta.clone() }
    }

    pub fn sqrt_beta(beta: &FieldElement) -> Self {
        let d = beta.disc;
        EFieldElement { x: FieldElement::zero(d), y: FieldElement::one(d), beta: beta.clone() }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.x.add(&o.x), self.y.add(&o.y), self.beta.clone())
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.x.sub(&o.x), self.y.sub(&o.y), self.beta.clone())
    }

    pub fn neg(&self) -> Self {
        Self::new(self.x.neg(), self.y.neg(), self.beta.clone())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let x = self.x.mul(&o.x).add(&self.y.mul(&o.y).mul(&self.beta));
        let y = self.x.mul(&o.y).add(&self.y.mul(&o.x));
        Self::new(x, y, self.beta.clone())
    }

    /// The nontrivial automorphism of E/F: `√β ↦ −√β`.
    pub fn conj(&self) -> Self {
        Self::new(self.x.clone(), self.y.neg(), self.beta.clone())
    }

    pub fn inv(&self) -> Result<Self> {
        let n = self.x.mul(&self.x).sub(&self.y.mul(&self.y).mul(&self.beta));
        let ni = n.inv()?;
        Ok(Self::new(self.x.mul(&ni), self.y.neg().mul(&ni), self.beta.clone()))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    /// Applies `w ↦ 1 − w` to every coordinate, including β.
    pub fn conj_f(&self) -> Self {
        Self::new(self.x.conj(), self.y.conj(), self.beta.conj())
    }
}

/// Which of the two embeddings of F into Q_p is meant: side 1 sends √D to
/// the canonical Hensel root, side 2 to its negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeSide {
    pub p: u64,
    pub side: u8,
}

impl PrimeSide {
    pub fn new(p: u64, side: u8) -> Self {
        assert!(side == 1 || side == 2, "side must be 1 or 2");
        PrimeSide { p, side }
    }

    pub fn other(&self) -> Self {
        PrimeSide { p: self.p, side: 3 - self.side }
    }
}

/// A fixed embedding F ↪ Q_p (and optionally E ↪ Q_p(α)) at a given
/// relative precision.
#[derive(Clone, Debug)]
pub struct FieldEmbedding {
    pub side: PrimeSide,
    pub disc: i64,
    pub prec: u32,
    w_image: Padic,
}

impl FieldEmbedding {
    pub fn new(disc: i64, side: PrimeSide, prec: u32) -> Result<Self> {
        let p = side.p;
        let dr = disc.rem_euclid(p as i64) as u64;
        if dr == 0 {
            return Err(Error::EmbeddingUnavailable(format!("{p} ramifies in Q(√{disc})")));
        }
        if !is_residue_mod_p(dr, p) {
            return Err(Error::EmbeddingUnavailable(format!("{p} is inert in Q(√{disc})")));
        }
        let n = prec + 2;
        let mut r = hensel_sqrt(&Padic::from_i64(p, disc, n))?;
        if side.side == 2 {
            r = r.neg();
        }
        let w_image = r.add(&r.constant_like(1)).div_int(2)?;
        Ok(FieldEmbedding { side, disc, prec, w_image })
    }

    pub fn p(&self) -> u64 {
        self.side.p
    }

    pub fn w_image(&self) -> &Padic {
        &self.w_image
    }

    pub fn rational(&self, x: &BigRational) -> Padic {
        Padic::from_rational(self.p(), x, self.prec + 2)
    }

    /// Ring homomorphism F → Q_p.
    pub fn embed(&self, x: &FieldElement) -> Padic {
        assert_eq!(x.disc, self.disc, "field mismatch");
        let a = self.rational(&x.a);
        if x.b.is_zero() {
            return a;
        }
        let b = self.rational(&x.b);
        a.add(&b.mul(&self.w_image)).cap_rel(self.prec)
    }

    /// Image of `√β` in Q_p(α); requires the prime to be inert in E.
    pub fn sqrt_beta(&self, beta: &FieldElement) -> Result<QuadExt> {
        let b = self.embed(beta);
        let Some(v) = b.valuation() else {
            return Err(Error::PrimeNotInert("β vanishes at this precision".into()));
        };
        if v % 2 != 0 {
            return Err(Error::PrimeNotInert(format!("β has odd valuation {v}: ramified")));
        }
        let s = QuadExt::sqrt_of_base(&b)?;
        if !s.b().is_zero() && s.a().is_zero() {
            Ok(s)
        } else {
            Err(Error::PrimeNotInert(format!("β is a square at side {}", self.side.side)))
        }
    }

    /// Ring homomorphism E → Q_p(α).
    pub fn embed_e(&self, z: &EFieldElement) -> Result<QuadExt> {
        let s = self.sqrt_beta(&z.beta)?;
        let x = QuadExt::from_base(self.embed(&z.x));
        if z.y.is_zero() {
            return Ok(x);
        }
        let y = self.embed(&z.y);
        Ok(x.add(&s.scale(&y)))
    }
}

pub fn embed_f(x: &FieldElement, side: PrimeSide, prec: u32) -> Result<Padic> {
    Ok(FieldEmbedding::new(x.disc, side, prec)?.embed(x))
}

pub fn embed_e(z: &EFieldElement, side: PrimeSide, prec: u32) -> Result<QuadExt> {
    FieldEmbedding::new(z.x.disc, side, prec)?.embed_e(z)
}

/// An integer in a fixture literal: a JSON number, or a decimal string when
/// it does not fit in 64 bits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntLit {
    Small(i64),
    Big(String),
}

impl IntLit {
    pub fn to_bigint(&self) -> Result<BigInt> {
        match self {
            IntLit::Small(n) => Ok(BigInt::from(*n)),
            IntLit::Big(s) => s.trim().parse().map_err(|_| Error::Schema(format!("bad integer literal {s:?}"))),
        }
    }

    pub fn from_bigint(n: &BigInt) -> Self {
        match i64::try_from(n) {
            Ok(k) => IntLit::Small(k),
            Err(_) => IntLit::Big(n.to_string()),
        }
    }
}

/// `[a_num, a_den, b_num, b_den]` for `a + b·w`.
pub type FLiteral = [IntLit; 4];

pub fn f_from_literal(l: &FLiteral, disc: i64) -> Result<FieldElement> {
    let v = [l[0].to_bigint()?, l[1].to_bigint()?, l[2].to_bigint()?, l[3].to_bigint()?];
    FieldElement::from_pairs(&v, disc)
}

pub fn f_to_literal(x: &FieldElement) -> FLiteral {
    x.to_pairs().map(|n| IntLit::from_bigint(&n))
}

/// An element of E: either an F-literal, or `[x, y]` for `x + y·√β`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ELiteral {
    Base(FLiteral),
    Ext([FLiteral; 2]),
}

impl ELiteral {
    pub fn to_element(&self, beta: &FieldElement) -> Result<EFieldElement> {
        let d = beta.disc;
        match self {
            ELiteral::Base(x) => Ok(EFieldElement::from_base(f_from_literal(x, d)?, beta)),
            ELiteral::Ext([x, y]) => Ok(EFieldElement::new(f_from_literal(x, d)?, f_from_literal(y, d)?, beta.clone())),
        }
    }

    pub fn from_element(z: &EFieldElement) -> Self {
        if z.y.is_zero() {
            ELiteral::Base(f_to_literal(&z.x))
        } else {
            ELiteral::Ext([f_to_literal(&z.x), f_to_literal(&z.y)])
        }
    }
}

/// Parses a decimal rational like `-25/9`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Small helper so callers can write `fe(3, -1, 37)` for `3 − w`.
pub fn fe(a: i64, b: i64, disc: i64) -> FieldElement {
    FieldElement::from_ints(a, b, disc)
}

/// `a/b` as a rational, for compact test and preset code.
pub fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    #[test]
    fn w_squared() {
        let w = FieldElement::w(37);
        assert_eq!(w.mul(&w), fe(9, 1, 37));
    }

    #[test]
    fn inverse_and_norm() {
        let x = fe(3, 1, 37);
        assert_eq!(x.norm(), q(3, 1));
        assert_eq!(x.mul(&x.inv().unwrap()), FieldElement::one(37));
    }

    #[test]
    fn embeddings_of_w() {
        let e1 = FieldEmbedding::new(37, PrimeSide::new(3, 1), 10).unwrap();
        let e2 = FieldEmbedding::new(37, PrimeSide::new(3, 2), 10).unwrap();
        assert_eq!(e1.w_image().residue(3).unwrap(), BigUint::from(10u32));
        assert_eq!(e2.w_image().residue(3).unwrap(), BigUint::from(18u32));
        let s = e1.w_image().add(e2.w_image());
        assert!(s.sub(&s.constant_like(1)).is_zero());
    }

    #[test]
    fn inert_and_ramified_primes() {
        assert!(matches!(FieldEmbedding::new(37, PrimeSide::new(5, 1), 5), Err(Error::EmbeddingUnavailable(_))));
        assert!(matches!(FieldEmbedding::new(21, PrimeSide::new(3, 1), 5), Err(Error::EmbeddingUnavailable(_))));
    }

    #[test]
    fn beta_is_inert_at_side_one() {
        let beta = fe(62, -21, 37);
        let e1 = FieldEmbedding::new(37, PrimeSide::new(3, 1), 10).unwrap();
        let b = e1.embed(&beta);
        assert_eq!(b.valuation(), Some(0));
        assert_eq!(b.leading_digit(), Some(2));
        let s = e1.sqrt_beta(&beta).unwrap();
        let sq = s.mul(&s);
        assert!(sq.a().agreement(&b) >= 10);
        // a square at side 1 is rejected
        let sq_beta = fe(4, 0, 37);
        assert!(matches!(e1.sqrt_beta(&sq_beta), Err(Error::PrimeNotInert(_))));
    }

    #[test]
    fn e_arithmetic() {
        let beta = fe(62, -21, 37);
        let s = EFieldElement::sqrt_beta(&beta);
        assert_eq!(s.mul(&s), EFieldElement::from_base(beta.clone(), &beta));
        let z = EFieldElement::new(fe(1, 2, 37), fe(-3, 1, 37), beta.clone());
        let one = EFieldElement::from_base(FieldElement::one(37), &beta);
        assert_eq!(z.mul(&z.inv().unwrap()), one);
    }

    #[test]
    fn literal_round_trip() {
        let beta = fe(41, -32, 37);
        let big = FieldElement::new(q(13134267, 1), q(-83850648, 2572261318), 37);
        let z = EFieldElement::new(fe(1, 0, 37), big, beta.clone());
        let lit = ELiteral::from_element(&z);
        let json = serde_json::to_string(&lit).unwrap();
        let back: ELiteral = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_element(&beta).unwrap(), z);
        let huge: ELiteral = serde_json::from_str(r#"[1, "100000000000000000000000", 0, 1]"#).unwrap();
        assert!(huge.to_element(&beta).unwrap().y.is_zero());
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rational("-25/9").unwrap(), q(-25, 9));
        assert_eq!(parse_rational("17").unwrap(), q(17, 1));
        assert!(parse_rational("1/0").is_err());
    }
}
