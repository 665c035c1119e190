//! Riemann sums of `log((t₁−τ₁)/(t₁−τ̄₁)) ⊗ log((t₂−τ₂)/(t₂−τ̄₂))` against
//! a harmonic cochain on the product of two trees.

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::bttree::{EdgeId, P1Point, Tree};
use crate::cochain::{Cochain1, FiniteCochain};
use crate::error::{Error, Result};
use crate::padic::{log_q, pow_p, Padic, QuadExt};
use crate::tensor::TensorValue;

/// The function integrated on one tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Integrand {
    /// `log_q((t − τ)/(t − τ̄))`, zero at `t = ∞`.
    Log { tau: QuadExt, q: Padic },
    Constant(QuadExt),
}

impl Integrand {
    pub fn log(tau: QuadExt, q: Padic) -> Result<Self> {
        if tau.b().is_zero() {
            return Err(Error::EmbeddingNotInert(format!("τ = {tau} lies in P¹(Q_p)")));
        }
        if q.valuation().is_none_or(|v| v <= 0) {
            return Err(Error::InvalidPeriod(format!("v(q) must be positive, got {q}")));
        }
        Ok(Integrand::Log { tau, q })
    }

    pub fn at(&self, t: &P1Point) -> Result<QuadExt> {
        match self {
            Integrand::Constant(k) => Ok(k.clone()),
            Integrand::Log { tau, q } => match t {
                P1Point::Infinity => Ok(QuadExt::from_base(Padic::zero(tau.prime()))),
                P1Point::Finite(x) => {
                    let x = QuadExt::from_base(x.clone());
                    log_q(&x.sub(tau).div(&x.sub(&tau.frobenius()))?, q)
                }
            },
        }
    }

    /// Digits lost by sampling at the centre of a ball instead of averaging,
    /// for the covering by outward edges at depth `m`. Infinite for
    /// constants.
    pub fn covering_bound(&self, m: u32) -> i64 {
        match self {
            Integrand::Constant(_) => i64::MAX,
            Integrand::Log { tau, .. } => {
                let vb = tau.b().valuation_bound().max(0);
                let va = tau.valuation_bound().min(0);
                m as i64 - 2 * (vb - va)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegralStats {
    pub depth: u32,
    pub terms: usize,
    pub millis: u128,
}

#[derive(Clone, Debug)]
pub struct Integral {
    pub value: TensorValue,
    /// Absolute precision of every coordinate of `value`.
    pub precision: i64,
    pub stats: IntegralStats,
}

/// Integrand values at the sample points of `outward_level(m)`, as
/// fixed-point integers `X` with `value = p^shift · X (mod p^{W+shift})`.
struct FixedPoint {
    coords: [Vec<i128>; 2],
    shift: i64,
    min_val: i64,
}

fn to_fixed(p: u64, vals: &[QuadExt], w: u32) -> Result<FixedPoint> {
    let min_val = vals.iter().map(QuadExt::valuation_bound).min().unwrap_or(i64::MAX);
    let shift = min_val.min(0);
    let modulus = pow_p(p, w);
    let conv = |x: &Padic| -> Result<i128> {
        if x.is_zero() && x.abs_prec().is_none_or(|a| a >= w as i64 + shift) {
            return Ok(0);
        }
        let r: BigUint = x.shift(-shift).residue(w)?;
        Ok((r % &modulus).to_i128().unwrap())
    };
    let a = vals.iter().map(|v| conv(v.a())).collect::<Result<Vec<_>>>()?;
    let b = vals.iter().map(|v| conv(v.b())).collect::<Result<Vec<_>>>()?;
    Ok(FixedPoint { coords: [a, b], shift, min_val })
}

fn sample_values(tree: &Tree, f: &Integrand, m: u32, prec: u32) -> Result<Vec<QuadExt>> {
    tree.outward_level(m).par_iter().map(|&e| f.at(&tree.sample_point(e, prec + 8))).collect()
}

/// `Σ c(e₁, e₂)·f₁(t_{e₁}) ⊗ f₂(t_{e₂})` over `outward_level(m)²`, with
/// precision capped by the working precision `prec`, the cochain modulus
/// and the covering error of both integrands.
pub fn riemann_log_integral(c: &FiniteCochain, f: [&Integrand; 2], prec: u32) -> Result<Integral> {
    riemann_log_integral_with(c.tree, c.m, c.modulus, |a, b| c.get(a, b).map(|x| c.centered(x)), f, prec)
}

/// The same sum for a cochain given by its values on product edges, known
/// modulo `modulus` when set.
pub fn riemann_log_integral_with(
    tree: Tree,
    m: u32,
    modulus_of_values: Option<i64>,
    value: impl Fn(EdgeId, EdgeId) -> Result<i64> + Sync,
    f: [&Integrand; 2],
    prec: u32,
) -> Result<Integral> {
    let start = Instant::now();
    let p = tree.p;
    // keep every product below 2^126
    let w = prec.min((62.0 / (p as f64).log2()).floor() as u32);
    let modulus = pow_p(p, w).to_i128().unwrap();
    let edges = tree.outward_level(m);
    let x1 = to_fixed(p, &sample_values(&tree, f[0], m, w)?, w)?;
    let x2 = to_fixed(p, &sample_values(&tree, f[1], m, w)?, w)?;
    let cvals: Vec<Vec<i64>> = edges
        .par_iter()
        .map(|&e1| edges.iter().map(|&e2| value(e1, e2)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    // S_j(e₁) = Σ_{e₂} c(e₁, e₂)·X₂_j(e₂), then T_ij = Σ_{e₁} X₁_i(e₁)·S_j(e₁)
    let inner: Vec<[i128; 2]> = cvals
        .par_iter()
        .map(|row| {
            let mut s = [0i128; 2];
            for (k, &cv) in row.iter().enumerate() {
                for j in 0..2 {
                    s[j] = (s[j] + i128::from(cv) * x2.coords[j][k]).rem_euclid(modulus);
                }
            }
            s
        })
        .collect();
    let mut t = [[0i128; 2]; 2];
    for (k, s) in inner.iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                t[i][j] = (t[i][j] + x1.coords[i][k] * s[j]).rem_euclid(modulus);
            }
        }
    }

    let shift = x1.shift + x2.shift;
    let mut precision = w as i64 + shift;
    if let Some(n) = modulus_of_values {
        let k = (n as f64).log(p as f64).round() as i64;
        precision = precision.min(k.saturating_add(x1.min_val).saturating_add(x2.min_val));
    }
    // Each factor's sampling error is multiplied by the other factor. A
    // constant factor integrates a harmonic cochain to exactly zero on every
    // covering, so there is no sampling error at all.
    let constant = f.iter().any(|g| matches!(g, Integrand::Constant(_)));
    if !constant {
        let cover = |i: usize, other: &FixedPoint| f[i].covering_bound(m).saturating_add(other.min_val.max(0));
        precision = precision.min(cover(0, &x2)).min(cover(1, &x1));
    }
    let coord = |x: i128| Padic::from_bigint(p, &BigInt::from(x), w + 2).shift(shift).cap_abs(precision);
    let value = TensorValue::from_coords(coord(t[0][0]), coord(t[0][1]), coord(t[1][0]), coord(t[1][1]));
    let stats = IntegralStats { depth: m, terms: edges.len() * edges.len(), millis: start.elapsed().as_millis() };
    Ok(Integral { value, precision, stats })
}

/// `Π f(t_U)^{μ(U)}` over `outward_level(m)` for `f(t) = (t − x)/(t − y)`.
pub fn mult_integral_single(c: &Cochain1, x: &QuadExt, y: &QuadExt, prec: u32) -> Result<QuadExt> {
    let tree = c.tree;
    let one = QuadExt::from_base(Padic::one(tree.p, prec));
    if x == y {
        return Ok(one);
    }
    let mut acc = one;
    for e in tree.outward_level(c.m) {
        let k = c.get(e)?;
        if k == 0 {
            continue;
        }
        let f = match tree.sample_point(e, prec + 8) {
            P1Point::Infinity => continue,
            P1Point::Finite(t) => {
                let t = QuadExt::from_base(t);
                t.sub(x).div(&t.sub(y))?
            }
        };
        let fk = f.pow(k.unsigned_abs());
        acc = if k > 0 { acc.mul(&fk) } else { acc.div(&fk)? };
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    /// Digits on which the two integrals agree.
    pub agreement: i64,
    pub precision: i64,
    pub agrees: bool,
}

/// Compares the integral of `c` with that of `c + shifted`, where `shifted`
/// is the coboundary contribution `g⋆D − D` assembled for the cycle.
pub fn coboundary_invariance_check(
    c: &FiniteCochain,
    shifted: &FiniteCochain,
    f: [&Integrand; 2],
    prec: u32,
) -> Result<InvarianceReport> {
    let a = riemann_log_integral(c, f, prec)?;
    let b = riemann_log_integral(&c.add(shifted), f, prec)?;
    let precision = a.precision.min(b.precision);
    let agreement = a.value.agreement(&b.value).min(precision);
    Ok(InvarianceReport { agreement, precision, agrees: agreement >= precision })
}

/// Sample edge used for the ball containing `t` at depth `m`.
pub fn covering_edge(tree: &Tree, t: &P1Point, m: u32) -> Result<EdgeId> {
    for e in tree.outward_level(m) {
        if tree.contains(&tree.ball(e), t)? {
            return Ok(e);
        }
    }
    Err(Error::InsufficientPrecision(format!("no depth-{m} ball contains the point")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau() -> QuadExt {
        QuadExt::alpha(3, 30).add(&QuadExt::from_base(Padic::from_i64(3, 1, 30)))
    }

    fn q() -> Padic {
        Padic::from_i64(3, 3, 30)
    }

    #[test]
    fn zero_cochain_integrates_to_zero() {
        let t = Tree::new(3);
        let f = Integrand::log(tau(), q()).unwrap();
        let r = riemann_log_integral(&FiniteCochain::zeros(t, 2, Some(2187)), [&f, &f], 20).unwrap();
        assert!(r.value.is_zero());
    }

    #[test]
    fn rejects_rational_tau_and_bad_period() {
        let real = QuadExt::from_base(Padic::from_i64(3, 2, 10));
        assert!(matches!(Integrand::log(real, q()), Err(Error::EmbeddingNotInert(_))));
        assert!(matches!(Integrand::log(tau(), Padic::from_i64(3, 2, 10)), Err(Error::InvalidPeriod(_))));
    }

    #[test]
    fn log_integrand_vanishes_at_infinity() {
        let f = Integrand::log(tau(), q()).unwrap();
        assert!(f.at(&P1Point::Infinity).unwrap().is_zero());
        let v = f.at(&P1Point::Finite(Padic::from_i64(3, 5, 30))).unwrap();
        assert!(v.valuation().unwrap() >= 1);
    }

    #[test]
    fn multiplicative_integral_trivial_cases() {
        let t = Tree::new(3);
        let c = Cochain1::dirac(t, &P1Point::Finite(Padic::from_i64(3, 1, 20)), &P1Point::Finite(Padic::from_i64(3, 2, 20)), 3).unwrap();
        let x = tau();
        assert_eq!(mult_integral_single(&c, &x, &x, 20).unwrap(), QuadExt::from_base(Padic::one(3, 20)));
    }

    #[test]
    fn covering_edge_is_unique() {
        let t = Tree::new(3);
        let pt = P1Point::Finite(Padic::from_i64(3, 7, 20));
        let e = covering_edge(&t, &pt, 3).unwrap();
        assert!(t.contains(&t.ball(e), &pt).unwrap());
    }
}
