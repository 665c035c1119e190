//! The point side: Tate periods, split/non-split detection, p-adic elliptic
//! logarithms over the unramified quadratic extension, `det_S` and `π_S`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numberfield::{f_from_literal, ELiteral, EFieldElement, FLiteral, FieldElement, FieldEmbedding, PrimeSide};
use crate::padic::{Padic, QuadExt};
use crate::tensor::TensorValue;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reduction {
    Split,
    NonSplit,
}

/// A Weierstrass model `y² + a₁xy + a₃y = x³ + a₂x² + a₄x + a₆` over Q_p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalCurve {
    pub a: [Padic; 5],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LocalPoint {
    Identity,
    Affine { x: QuadExt, y: QuadExt },
}

impl LocalPoint {
    pub fn affine(x: QuadExt, y: QuadExt) -> Self {
        LocalPoint::Affine { x, y }
    }
}

/// Tate period and the constant relating the model's invariant differential
/// to the one of `E_q`.
#[derive(Clone, Debug)]
pub struct TateData {
    pub q: Padic,
    pub u: QuadExt,
    pub reduction: Reduction,
}

fn sigma(n: u64, k: u32) -> BigInt {
    (1..=n).filter(|d| n % d == 0).map(|d| BigInt::from(d).pow(k)).sum()
}

/// Integer q-expansion coefficients `[c_0, …, c_{len-1}]`.
fn eisenstein(len: usize, k: u32, scale: i64) -> Vec<BigInt> {
    let mut c = vec![BigInt::from(1)];
    c.extend((1..len as u64).map(|n| sigma(n, k) * scale));
    c
}

fn int_mul(a: &[BigInt], b: &[BigInt], len: usize) -> Vec<BigInt> {
    let mut c = vec![BigInt::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            c[i + j] += x * y;
        }
    }
    c
}

/// `q/Δ · E₄³ = q·j(q)` as an integer series `1 + 744q + 196884q² + …`.
fn q_times_j(len: usize) -> Vec<BigInt> {
    // Δ/q = ∏ (1 − qⁿ)^24
    let mut d = vec![BigInt::zero(); len];
    d[0] = BigInt::from(1);
    for n in 1..len {
        for _ in 0..24 {
            for i in (n..len).rev() {
                let t = d[i - n].clone();
                d[i] -= t;
            }
        }
    }
    // d[0] = 1, so the inverse is integral
    let mut inv = vec![BigInt::zero(); len];
    inv[0] = BigInt::from(1);
    for n in 1..len {
        let s: BigInt = (1..=n).map(|i| &d[i] * &inv[n - i]).sum();
        inv[n] = -s;
    }
    let e4 = eisenstein(len, 3, 240);
    let e4_3 = int_mul(&int_mul(&e4, &e4, len), &e4, len);
    int_mul(&e4_3, &inv, len)
}

/// `Σ c_n xⁿ` for `n ≥ start`, evaluated with the given power offset.
fn eval_int_series(c: &[BigInt], x: &Padic, offset: usize) -> Padic {
    let mut acc = Padic::zero(x.prime());
    let mut xn = x.constant_like(1);
    for cn in c.iter().skip(offset) {
        if !cn.is_zero() {
            acc = acc.add(&xn.mul(&x.rational_like(&BigRational::from_integer(cn.clone()))));
        }
        xn = xn.mul(x);
    }
    acc
}

fn series_mul(a: &[Padic], b: &[Padic], len: usize) -> Vec<Padic> {
    let p = a[0].prime();
    let mut c = vec![Padic::zero(p); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_exact_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            if !y.is_exact_zero() {
                c[i + j] = c[i + j].add(&x.mul(y));
            }
        }
    }
    c
}

fn series_inv(a: &[Padic], len: usize) -> Result<Vec<Padic>> {
    let p = a[0].prime();
    let inv0 = a[0].inv()?;
    let mut b = vec![Padic::zero(p); len];
    b[0] = inv0.clone();
    for n in 1..len {
        let mut s = Padic::zero(p);
        for i in 1..=n.min(a.len() - 1) {
            s = s.add(&a[i].mul(&b[n - i]));
        }
        b[n] = s.mul(&inv0).neg();
    }
    Ok(b)
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

impl LocalCurve {
    pub fn new(a: [Padic; 5]) -> Self {
        LocalCurve { a }
    }

    pub fn from_field(a: &[FieldElement; 5], emb: &FieldEmbedding) -> Self {
        LocalCurve { a: a.clone().map(|x| emb.embed(&x)) }
    }

    pub fn prime(&self) -> u64 {
        self.a[0].prime()
    }

    fn k(&self, n: i64) -> Padic {
        let r = self.a.iter().find(|x| !x.is_exact_zero()).cloned().unwrap_or_else(|| Padic::one(self.prime(), 64));
        r.constant_like(n)
    }

    pub fn b_invariants(&self) -> [Padic; 4] {
        let [a1, a2, a3, a4, a6] = &self.a;
        let b2 = a1.mul(a1).add(&a2.mul_int(4));
        let b4 = a1.mul(a3).add(&a4.mul_int(2));
        let b6 = a3.mul(a3).add(&a6.mul_int(4));
        let b8 = a1.mul(a1).mul(a6).add(&a2.mul(a6).mul_int(4)).sub(&a1.mul(a3).mul(a4)).add(&a2.mul(a3).mul(a3)).sub(&a4.mul(a4));
        [b2, b4, b6, b8]
    }

    pub fn c4(&self) -> Padic {
        let [b2, b4, ..] = self.b_invariants();
        b2.mul(&b2).sub(&b4.mul_int(24))
    }

    pub fn c6(&self) -> Padic {
        let [b2, b4, b6, _] = self.b_invariants();
        b2.mul(&b2).mul(&b2).neg().add(&b2.mul(&b4).mul_int(36)).sub(&b6.mul_int(216))
    }

    pub fn discriminant(&self) -> Padic {
        let [b2, b4, b6, b8] = self.b_invariants();
        b2.mul(&b2)
            .mul(&b8)
            .neg()
            .sub(&b4.mul(&b4).mul(&b4).mul_int(8))
            .sub(&b6.mul(&b6).mul_int(27))
            .add(&b2.mul(&b4).mul(&b6).mul_int(9))
    }

    pub fn j(&self) -> Result<Padic> {
        let c4 = self.c4();
        c4.mul(&c4).mul(&c4).div(&self.discriminant())
    }

    /// Reduction type from the tangent cone at the node of the reduced
    /// model. Good and additive reduction are rejected.
    pub fn reduction(&self) -> Result<Reduction> {
        let p = self.prime();
        let vmin = self
            .a
            .iter()
            .zip([1i64, 2, 3, 4, 6])
            .filter_map(|(x, i)| x.valuation().map(|v| (v, i)))
            .map(|(v, i)| if v < 0 { (-v + i - 1) / i } else { 0 })
            .max()
            .unwrap_or(0);
        let mut r = [0i64; 5];
        for (idx, (x, i)) in self.a.iter().zip([1i64, 2, 3, 4, 6]).enumerate() {
            let y = x.shift(i * vmin);
            r[idx] = y.residue(1)?.to_i64().unwrap();
        }
        let p = p as i64;
        let [a1, a2, a3, a4, a6] = r;
        let m = |x: i64| x.rem_euclid(p);
        let mut node = None;
        for x in 0..p {
            for y in 0..p {
                let f = y * y + a1 * x * y + a3 * y - x * x * x - a2 * x * x - a4 * x - a6;
                let fx = a1 * y - 3 * x * x - 2 * a2 * x - a4;
                let fy = 2 * y + a1 * x + a3;
                if m(f) == 0 && m(fx) == 0 && m(fy) == 0 {
                    node = Some(x);
                }
            }
        }
        let Some(x0) = node else {
            return Err(Error::NotMultiplicative("good reduction".into()));
        };
        let disc = m(a1 * a1 + 4 * (3 * x0 + a2));
        if disc == 0 {
            return Err(Error::NotMultiplicative("additive reduction".into()));
        }
        let square = (1..p).any(|s| s * s % p == disc);
        Ok(if square { Reduction::Split } else { Reduction::NonSplit })
    }

    pub fn is_split(&self) -> Result<bool> {
        Ok(self.reduction()? == Reduction::Split)
    }

    /// Quadratic twist by `d`, in the model `y² = x³ + d·b₂/4·x² + d²·b₄/2·x + d³·b₆/4`.
    pub fn twist(&self, d: i64) -> LocalCurve {
        let [b2, b4, b6, _] = self.b_invariants();
        let z = Padic::zero(self.prime());
        let q = |x: &Padic, e: u32, k: i64| x.mul(&x.constant_like(d.pow(e))).div_int(k).unwrap();
        LocalCurve { a: [z.clone(), q(&b2, 1, 4), z, q(&b4, 2, 2), q(&b6, 3, 4)] }
    }

    /// The Tate curve `E_q`: `a₁ = 1`, `a₄ = −5s₃`, `a₆ = −(5s₃ + 7s₅)/12`.
    pub fn tate_curve(q: &Padic) -> Result<LocalCurve> {
        let v = q.valuation().filter(|&v| v > 0).ok_or_else(|| Error::InvalidPeriod(q.to_string()))?;
        let len = (q.abs_prec().unwrap() / v + 2) as usize;
        let s = |k: u32| {
            let mut c = vec![BigInt::zero()];
            c.extend((1..len as u64).map(|n| sigma(n, k)));
            eval_int_series(&c, q, 0)
        };
        let (s3, s5) = (s(3), s(5));
        let z = Padic::zero(q.prime());
        let a4 = s3.mul_int(-5);
        let a6 = s3.mul_int(5).add(&s5.mul_int(7)).neg().div_int(12)?;
        Ok(LocalCurve { a: [q.constant_like(1), z.clone(), z, a4, a6] })
    }

    /// Solves `j(q) = j` by the fixed point `q ↦ 1/(j − (j(q) − 1/q))`.
    pub fn tate_period(&self, prec: u32) -> Result<Padic> {
        let j = self.j()?;
        let vj = j.valuation().unwrap_or(0);
        if vj >= 0 {
            return Err(Error::NotMultiplicative(format!("v(j) = {vj} is not negative")));
        }
        let vq = -vj;
        let target = vq + prec as i64;
        let len = (target / vq + 3) as usize;
        let jq = q_times_j(len + 1);
        let mut q = j.inv()?;
        for _ in 0..(2 * prec + 8) {
            let f = eval_int_series(&jq, &q, 1);
            let next = j.sub(&f).inv()?;
            let done = next.agreement(&q) >= next.abs_prec().unwrap_or(i64::MAX).min(target);
            q = next;
            if done {
                break;
            }
        }
        Ok(q.cap_abs(target))
    }

    pub fn tate_data(&self, prec: u32) -> Result<TateData> {
        let reduction = self.reduction()?;
        let q = self.tate_period(prec)?;
        let vq = q.valuation().unwrap();
        let len = (q.abs_prec().unwrap() / vq + 3) as usize;
        let e4 = eval_int_series(&eisenstein(len, 3, 240), &q, 0);
        let e6 = eval_int_series(&eisenstein(len, 5, -504), &q, 0);
        let u2 = self.c6().mul(&e4).div(&self.c4().mul(&e6.neg()))?;
        let u = QuadExt::sqrt_of_base(&u2)?;
        Ok(TateData { q, u, reduction })
    }

    fn ext(&self, i: usize) -> QuadExt {
        QuadExt::from_base(self.a[i].clone())
    }

    /// `y² + a₁xy + a₃y − (x³ + a₂x² + a₄x + a₆)`.
    pub fn residual(&self, pt: &LocalPoint) -> QuadExt {
        let LocalPoint::Affine { x, y } = pt else {
            return QuadExt::from_base(Padic::zero(self.prime()));
        };
        let (a1, a2, a3, a4, a6) = (self.ext(0), self.ext(1), self.ext(2), self.ext(3), self.ext(4));
        let lhs = y.mul(y).add(&a1.mul(x).mul(y)).add(&a3.mul(y));
        let rhs = x.mul(x).mul(x).add(&a2.mul(x).mul(x)).add(&a4.mul(x)).add(&a6);
        lhs.sub(&rhs)
    }

    pub fn neg(&self, pt: &LocalPoint) -> LocalPoint {
        match pt {
            LocalPoint::Identity => LocalPoint::Identity,
            LocalPoint::Affine { x, y } => {
                let ny = y.neg().sub(&self.ext(0).mul(x)).sub(&self.ext(2));
                LocalPoint::Affine { x: x.clone(), y: ny }
            }
        }
    }

    pub fn add(&self, p1: &LocalPoint, p2: &LocalPoint) -> Result<LocalPoint> {
        let (LocalPoint::Affine { x: x1, y: y1 }, LocalPoint::Affine { x: x2, y: y2 }) = (p1, p2) else {
            return Ok(if matches!(p1, LocalPoint::Identity) { p2.clone() } else { p1.clone() });
        };
        let (a1, a2, a3, a4) = (self.ext(0), self.ext(1), self.ext(2), self.ext(3));
        let lam = if x1.sub(x2).is_zero() {
            let den = y1.add(y2).add(&a1.mul(x2)).add(&a3);
            if den.is_zero() {
                return Ok(LocalPoint::Identity);
            }
            let num = x1.mul(x1).mul_int(3).add(&a2.mul(x1).mul_int(2)).add(&a4).sub(&a1.mul(y1));
            num.div(&den)?
        } else {
            y2.sub(y1).div(&x2.sub(x1))?
        };
        let nu = y1.sub(&lam.mul(x1));
        let x3 = lam.mul(&lam).add(&a1.mul(&lam)).sub(&a2).sub(x1).sub(x2);
        let y3 = lam.add(&a1).mul(&x3).neg().sub(&nu).sub(&a3);
        Ok(LocalPoint::Affine { x: x3, y: y3 })
    }

    pub fn mul(&self, k: u64, pt: &LocalPoint) -> Result<LocalPoint> {
        let mut r = LocalPoint::Identity;
        for bit in (0..64 - k.leading_zeros()).rev() {
            r = self.add(&r, &r)?;
            if (k >> bit) & 1 == 1 {
                r = self.add(&r, pt)?;
            }
        }
        Ok(r)
    }

    /// Coefficients `ω_n` of the invariant differential `ω = Σ ω_n tⁿ dt` in
    /// the formal parameter `t = −x/y`.
    pub fn formal_differential(&self, terms: usize) -> Result<Vec<Padic>> {
        let p = self.prime();
        let n = terms + 3;
        let [a1, a2, a3, a4, a6] = &self.a;
        let mono = |k: usize| {
            let mut s = vec![Padic::zero(p); n];
            s[k] = self.k(1);
            s
        };
        let scale = |c: &Padic, s: Vec<Padic>| s.into_iter().map(|x| x.mul(c)).collect::<Vec<_>>();
        let sum = |parts: Vec<Vec<Padic>>| {
            let mut out = vec![Padic::zero(p); n];
            for part in parts {
                for (o, x) in out.iter_mut().zip(part) {
                    *o = o.add(&x);
                }
            }
            out
        };
        // w = t³ + a₁tw + a₂t²w + a₃w² + a₄tw² + a₆w³, one new coefficient per pass
        let (t, t2, t3) = (mono(1), mono(2), mono(3));
        let mut w = vec![Padic::zero(p); n];
        for _ in 0..n {
            let ww = series_mul(&w, &w, n);
            let next = sum(vec![
                t3.clone(),
                scale(a1, series_mul(&t, &w, n)),
                scale(a2, series_mul(&t2, &w, n)),
                scale(a3, ww.clone()),
                scale(a4, series_mul(&t, &ww, n)),
                scale(a6, series_mul(&w, &ww, n)),
            ]);
            if next == w {
                break;
            }
            w = next;
        }
        // ω/dt = (w − t·w′) / (w·(−2 + a₁t + a₃w)), both sides divided by t³
        let big_w: Vec<Padic> = (0..terms).map(|k| w[k + 3].clone()).collect();
        let num: Vec<Padic> = (0..terms).map(|k| w[k + 3].mul_int(1 - (k as i64 + 3))).collect();
        let mut den2 = vec![Padic::zero(p); terms];
        den2[0] = self.k(-2);
        if terms > 1 {
            den2[1] = a1.clone();
        }
        for k in 3..terms {
            den2[k] = den2[k].add(&a3.mul(&w[k]));
        }
        let den = series_mul(&big_w, &den2, terms);
        Ok(series_mul(&num, &series_inv(&den, terms)?, terms))
    }

    /// Formal-group logarithm `Σ ω_n t^{n+1}/(n+1)` for `v(t) ≥ 1`, with
    /// the truncation error folded into the returned precision.
    pub fn formal_log(&self, t: &QuadExt) -> Result<QuadExt> {
        let p = self.prime();
        let Some(vt) = t.valuation() else {
            return Ok(QuadExt::from_base(Padic::zero(p)).cap_abs(t.abs_prec().unwrap_or(i64::MAX)));
        };
        if vt < 1 {
            return Err(Error::InsufficientPrecision(format!("t = {t} is outside the formal group")));
        }
        let target = t.abs_prec().unwrap();
        let mut terms = 1usize;
        while (terms as i64 + 1) * vt - floor_log(p, terms as u64 + 1) < target {
            terms += 1;
        }
        let om = self.formal_differential(terms)?;
        let mut acc = QuadExt::from_base(Padic::zero(p));
        let mut tk = t.clone();
        for (n, c) in om.iter().enumerate() {
            let term = tk.scale(c);
            acc = acc.add(&QuadExt::new(term.a().div_int(n as i64 + 1)?, term.b().div_int(n as i64 + 1)?, term.d()));
            tk = tk.mul(t);
        }
        let tail = (terms as i64 + 1) * vt - floor_log(p, terms as u64 + 1);
        Ok(acc.cap_abs(tail))
    }

    /// The logarithm `A(E_p) → E_p` normalised through Tate's
    /// parametrization: multiply into the formal group, take the formal
    /// log, divide back and rescale by `u`.
    pub fn elliptic_log(&self, pt: &LocalPoint, tate: &TateData) -> Result<QuadExt> {
        let p = self.prime();
        if matches!(pt, LocalPoint::Identity) {
            return Ok(QuadExt::from_base(Padic::zero(p)));
        }
        let vq = tate.q.valuation().unwrap() as u64;
        let mut k = (p * p - 1) * vq;
        let mut r = self.mul(k, pt)?;
        for _ in 0..8 {
            let LocalPoint::Affine { x, y } = &r else {
                // torsion point
                return Ok(QuadExt::from_base(Padic::zero(p)));
            };
            let t = x.div(y)?.neg();
            if t.valuation_bound() >= 1 {
                let l = self.formal_log(&t)?;
                let l = QuadExt::new(l.a().div_int(k as i64)?, l.b().div_int(k as i64)?, l.d());
                return Ok(l.mul(&tate.u));
            }
            r = self.mul(p, &r)?;
            k *= p;
        }
        Err(Error::InsufficientPrecision(format!("{k}·P did not reach the formal group")))
    }
}

/// A point of the Tate curve `E_q` attached to `u ∈ Q_p^×`, from the
/// classical series in `u` and `q` (test oracle for the normalisation).
pub fn tate_point(u: &Padic, q: &Padic) -> Result<LocalPoint> {
    let vq = q.valuation().filter(|&v| v > 0).ok_or_else(|| Error::InvalidPeriod(q.to_string()))?;
    let target = u.abs_prec().unwrap().min(q.abs_prec().unwrap());
    let one = u.constant_like(1);
    let ui = u.inv()?;
    let frac = |z: &Padic, e: u64| -> Result<Padic> { z.div(&one.sub(z).pow(e)) };
    let mut x = frac(u, 2)?;
    let mut y = u.mul(u).div(&one.sub(u).pow(3))?;
    let mut qn = q.clone();
    let mut n = 1;
    while n * vq <= target + 4 * vq {
        let (a, b) = (qn.mul(u), qn.mul(&ui));
        let s1 = frac(&qn, 2)?;
        x = x.add(&frac(&a, 2)?).add(&frac(&b, 2)?).sub(&s1.mul_int(2));
        y = y.add(&a.mul(&a).div(&one.sub(&a).pow(3))?).sub(&frac(&b, 3)?).add(&s1);
        qn = qn.mul(q);
        n += 1;
    }
    Ok(LocalPoint::affine(QuadExt::from_base(x), QuadExt::from_base(y)))
}

/// `log₁(P₁)⊗log₂(P₂) − log₁(P₂)⊗log₂(P₁)`.
pub fn det_s(log1: [&QuadExt; 2], log2: [&QuadExt; 2]) -> TensorValue {
    TensorValue::tensor(log1[0], log2[1]).sub(&TensorValue::tensor(log1[1], log2[0]))
}

/// The partial-Frobenius projector in logarithmic coordinates.
///
/// On points, `π_S = ∏_{split}(1 − σ*) ∏_{non-split}(1 + σ*)`. The log at a
/// split prime intertwines σ* with the Frobenius of E_p; at a non-split
/// prime (the unramified twist) with minus the Frobenius. Both factors
/// therefore become `1 − frob` on the log side.
pub fn pi_s(x: &TensorValue, pattern: [Reduction; 2]) -> TensorValue {
    let mut out = x.clone();
    for (factor, red) in pattern.iter().enumerate() {
        let sigma_log = match red {
            Reduction::Split => out.frob(factor),
            Reduction::NonSplit => out.frob(factor).neg(),
        };
        out = match red {
            Reduction::Split => out.sub(&sigma_log),
            Reduction::NonSplit => out.add(&sigma_log),
        };
    }
    out
}

/// Point-side input file in fixture literal syntax.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointSideSpec {
    pub schema_version: u32,
    #[serde(default)]
    pub label: String,
    pub p: u64,
    pub disc: i64,
    pub a: [FLiteral; 5],
    pub beta: FLiteral,
    pub points: [[ELiteral; 2]; 2],
    /// Read every literal with `w ↦ 1 − w`.
    #[serde(default)]
    pub conjugate_w: bool,
    /// Expected α⊗α coordinate, as a digit string.
    #[serde(default)]
    pub expected: Option<String>,
}

#[derive(Clone, Debug)]
pub struct PointSideInput {
    pub p: u64,
    pub disc: i64,
    pub a: [FieldElement; 5],
    pub beta: FieldElement,
    pub points: [[EFieldElement; 2]; 2],
}

impl PointSideSpec {
    pub fn to_input(&self) -> Result<PointSideInput> {
        if self.schema_version != 1 {
            return Err(Error::Schema(format!("unsupported schema version {}", self.schema_version)));
        }
        let conj = self.conjugate_w;
        let f = |l: &FLiteral| -> Result<FieldElement> {
            let x = f_from_literal(l, self.disc)?;
            Ok(if conj { x.conj() } else { x })
        };
        let beta = f(&self.beta)?;
        let mut a = Vec::new();
        for l in &self.a {
            a.push(f_from_literal(l, self.disc)?);
        }
        let e = |l: &ELiteral| -> Result<EFieldElement> {
            let raw_beta = f_from_literal(&self.beta, self.disc)?;
            let z = l.to_element(&raw_beta)?;
            Ok(if conj { z.conj_f() } else { z })
        };
        let pt = |l: &[ELiteral; 2]| -> Result<[EFieldElement; 2]> { Ok([e(&l[0])?, e(&l[1])?]) };
        Ok(PointSideInput {
            p: self.p,
            disc: self.disc,
            a: a.try_into().unwrap(),
            beta: beta.clone(),
            points: [pt(&self.points[0])?, pt(&self.points[1])?],
        })
    }
}

#[derive(Clone, Debug)]
pub struct SideReport {
    pub side: PrimeSide,
    pub tate: TateData,
    pub logs: [QuadExt; 2],
    /// Valuations of the curve equation residual at the embedded points.
    pub residual_valuations: [i64; 2],
}

#[derive(Clone, Debug)]
pub struct PointSideResult {
    pub sides: [SideReport; 2],
    pub det: TensorValue,
    pub projected: TensorValue,
}

impl PointSideResult {
    /// The α⊗α coordinate of `π_S(det_S)`.
    pub fn log_a(&self) -> &Padic {
        &self.projected.c[1][1]
    }
}

fn side_report(input: &PointSideInput, side: PrimeSide, work: u32) -> Result<SideReport> {
    let emb = FieldEmbedding::new(input.disc, side, work)?;
    let curve = LocalCurve::from_field(&input.a, &emb);
    let tate = curve.tate_data(work)?;
    let mut logs = Vec::new();
    let mut residual_valuations = [0; 2];
    for (i, [x, y]) in input.points.iter().enumerate() {
        let pt = LocalPoint::affine(emb.embed_e(x)?, emb.embed_e(y)?);
        residual_valuations[i] = curve.residual(&pt).valuation_bound();
        logs.push(curve.elliptic_log(&pt, &tate)?);
    }
    Ok(SideReport { side, tate, logs: logs.try_into().unwrap(), residual_valuations })
}

/// `π_S(det_S(P₁, P₂))` with the tensor factors in the given side order,
/// reported to absolute precision `prec` (or less, when the inputs do not
/// support it).
pub fn point_side_ordered(input: &PointSideInput, order: [u8; 2], prec: u32) -> Result<PointSideResult> {
    let mut guard = 20;
    loop {
        let work = prec + guard;
        let s1 = side_report(input, PrimeSide::new(input.p, order[0]), work).map_err(|e| e.at("point-side"))?;
        let s2 = side_report(input, PrimeSide::new(input.p, order[1]), work).map_err(|e| e.at("point-side"))?;
        let det = det_s([&s1.logs[0], &s1.logs[1]], [&s2.logs[0], &s2.logs[1]]);
        let projected = pi_s(&det, [s1.tate.reduction, s2.tate.reduction]);
        let reached = projected.abs_prec().unwrap_or(i64::MAX);
        if reached >= prec as i64 || guard >= 80 {
            return Ok(PointSideResult {
                sides: [s1, s2],
                det: det.cap_abs(prec as i64),
                projected: projected.cap_abs(prec as i64),
            });
        }
        guard *= 2;
    }
}

pub fn point_side(input: &PointSideInput, prec: u32) -> Result<PointSideResult> {
    point_side_ordered(input, [1, 2], prec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numberfield::{fe, q};
    use crate::padic::iwasawa_log;

    fn e1() -> FieldEmbedding {
        FieldEmbedding::new(37, PrimeSide::new(3, 1), 30).unwrap()
    }

    fn curve_37(emb: &FieldEmbedding) -> LocalCurve {
        let a = [fe(1, 0, 37), fe(0, 1, 37), fe(1, 0, 37), fe(1, 1, 37), fe(2, 0, 37)];
        LocalCurve::from_field(&a, emb)
    }

    #[test]
    fn q_times_j_coefficients() {
        let c = q_times_j(4);
        assert_eq!(c, vec![BigInt::from(1), BigInt::from(744), BigInt::from(196884), BigInt::from(21493760)]);
    }

    #[test]
    fn reduction_types_of_the_two_sides() {
        let c1 = curve_37(&e1());
        let c2 = curve_37(&FieldEmbedding::new(37, PrimeSide::new(3, 2), 30).unwrap());
        assert_eq!(c1.reduction().unwrap(), Reduction::NonSplit);
        assert_eq!(c2.reduction().unwrap(), Reduction::Split);
    }

    #[test]
    fn tate_period_inverts_j() {
        let c = curve_37(&e1());
        let q = c.tate_period(12).unwrap();
        let j = c.j().unwrap();
        assert_eq!(q.valuation(), Some(-j.valuation().unwrap()));
        assert_eq!(q.valuation(), c.discriminant().valuation());
        let et = LocalCurve::tate_curve(&q).unwrap();
        assert!(et.j().unwrap().agreement(&j) >= j.valuation().unwrap() + 10);
    }

    #[test]
    fn tate_curve_is_split() {
        let q = Padic::from_i64(3, 3 * 7, 20);
        assert_eq!(LocalCurve::tate_curve(&q).unwrap().reduction().unwrap(), Reduction::Split);
    }

    #[test]
    fn log_on_tate_curve_matches_log_u() {
        let q = Padic::from_i64(3, 9 * 5, 24);
        let curve = LocalCurve::tate_curve(&q).unwrap();
        let tate = curve.tate_data(20).unwrap();
        assert!(tate.q.agreement(&q) >= 20);
        for r in [1i64, 2, 5, 11] {
            let u = Padic::from_i64(3, 1 + 3 * r, 24);
            let pt = tate_point(&u, &q).unwrap();
            assert!(curve.residual(&pt).valuation_bound() >= 15, "Tate point off curve");
            let l = curve.elliptic_log(&pt, &tate).unwrap();
            let expected = iwasawa_log(&u).unwrap();
            assert!(l.a().agreement(&expected) >= 12, "r={r}: {l} vs {expected}");
            assert!(l.b().is_zero());
        }
    }

    #[test]
    fn log_is_additive_on_multiples() {
        let emb = e1();
        let c = curve_37(&emb);
        let tate = c.tate_data(20).unwrap();
        let pt = LocalPoint::affine(
            QuadExt::from_base(emb.embed(&fe(3, -1, 37))),
            QuadExt::from_base(emb.embed(&fe(4, -1, 37))),
        );
        let l1 = c.elliptic_log(&pt, &tate).unwrap();
        let l2 = c.elliptic_log(&c.add(&pt, &pt).unwrap(), &tate).unwrap();
        assert!(l2.agreement(&l1.mul_int(2)) >= 12);
        assert!(c.elliptic_log(&LocalPoint::Identity, &tate).unwrap().is_zero());
    }

    #[test]
    fn twisting_flips_reduction() {
        let emb = e1();
        let c = curve_37(&emb);
        let t = c.twist(-1);
        assert_eq!(t.reduction().unwrap(), Reduction::Split);
        assert_eq!(t.twist(-1).reduction().unwrap(), Reduction::NonSplit);
    }

    #[test]
    fn pi_s_examples() {
        let alpha = QuadExt::alpha(3, 10);
        let aa = TensorValue::tensor(&alpha, &alpha);
        let out = pi_s(&aa, [Reduction::Split, Reduction::NonSplit]);
        assert_eq!(out, aa.mul_int(4));
        let one = QuadExt::from_base(Padic::one(3, 10));
        assert!(pi_s(&TensorValue::tensor(&one, &alpha), [Reduction::Split, Reduction::Split]).is_zero());
        // (1 − σ₁) applied twice is twice (1 − σ₁)
        let x = TensorValue::tensor(&one.add(&alpha.mul_int(2)), &one);
        let once = x.sub(&x.frob(0));
        let twice = once.sub(&once.frob(0));
        assert_eq!(twice, once.mul_int(2));
    }

    #[test]
    fn det_is_alternating() {
        let a = QuadExt::new(Padic::from_i64(3, 2, 10), Padic::from_i64(3, 5, 10), -1);
        let b = QuadExt::new(Padic::from_i64(3, 7, 10), Padic::from_i64(3, 1, 10), -1);
        assert!(det_s([&a, &a], [&b, &b]).is_zero());
        let d = det_s([&a, &b], [&b, &a]);
        assert_eq!(det_s([&b, &a], [&a, &b]), d.neg());
    }

    #[test]
    fn rational_point_embeds_on_curve() {
        let emb = e1();
        let c = curve_37(&emb);
        let x = emb.embed(&FieldElement::new(q(8, 1), q(-25, 9), 37));
        assert!(x.valuation().unwrap() >= -2);
        let pt = LocalPoint::affine(
            QuadExt::from_base(emb.embed(&fe(3, -1, 37))),
            QuadExt::from_base(emb.embed(&fe(4, -1, 37))),
        );
        assert!(c.residual(&pt).valuation_bound() >= 25);
    }
}
