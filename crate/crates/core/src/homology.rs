//! The cycle attached to ψ and the full pipeline from a fixture to the
//! logarithm of the plectic invariant.

use serde::Serialize;

use crate::bttree::Mat2;
use crate::error::{Error, Result};
use crate::harmonize::{harmonize, Harmonized, SolverStats};
use crate::integrate::{riemann_log_integral, Integral, IntegralStats, Integrand};
use crate::padic::{Padic, QuadExt};
use crate::shapiro::{Fixture, ShapiroCocycle};
use crate::tensor::TensorValue;

/// The two fixed points `(τ, τ̄)` of the Möbius map of `m`, with `τ` the
/// root `((a − d) + √disc)/(2c)` for the canonical square root.
pub fn fixed_points(m: &Mat2) -> Result<(QuadExt, QuadExt)> {
    let [[a, b], [c, d]] = &m.m;
    if c.is_zero() {
        return Err(Error::EmbeddingNotInert("lower-left entry vanishes, ∞ is fixed".into()));
    }
    let amd = a.sub(d);
    let disc = amd.mul(&amd).add(&b.mul(c).mul_int(4));
    let root = match QuadExt::sqrt_of_base(&disc) {
        Ok(r) if r.a().is_zero() && !r.b().is_zero() => r,
        Ok(_) => return Err(Error::EmbeddingNotInert(format!("discriminant {disc} is a square"))),
        Err(Error::NotASquare(why)) => return Err(Error::EmbeddingNotInert(format!("ramified discriminant: {why}"))),
        Err(e) => return Err(e),
    };
    let two_c = QuadExt::from_base(c.mul_int(2));
    let tau = QuadExt::from_base(amd).add(&root).div(&two_c)?;
    let bar = tau.frobenius();
    Ok((tau, bar))
}

/// `(aτ + b)/(cτ + d)` over the quadratic extension.
pub fn mobius(m: &Mat2, t: &QuadExt) -> Result<QuadExt> {
    let [[a, b], [c, d]] = &m.m;
    let num = t.scale(a).add(&QuadExt::from_base(b.clone()));
    let den = t.scale(c).add(&QuadExt::from_base(d.clone()));
    num.div(&den)
}

#[derive(Clone, Debug, Serialize)]
pub struct PlecticReport {
    pub label: String,
    pub depth: u32,
    pub cochain_digest: String,
    pub solver: SolverStats,
    pub integral: IntegralStats,
    pub precision: i64,
    pub value: [String; 4],
    pub tau: [String; 2],
}

pub struct PlecticResult {
    pub value: TensorValue,
    pub precision: i64,
    pub harmonized: Harmonized,
    pub integral: Integral,
    pub tau: [QuadExt; 2],
    pub report: PlecticReport,
}

/// The cycle's integrands: `log((t − τ)/(t − τ̄))` at the fixed points of ψ
/// on each side. The ratio is a unit, so the branch parameter is irrelevant
/// and `p` is used.
pub fn cycle_integrands(fx: &Fixture) -> Result<[Integrand; 2]> {
    let p = fx.ctx.p();
    let mk = |side: usize| -> Result<Integrand> {
        let (tau, _) = fixed_points(&fx.psi.local[side])?;
        Integrand::log(tau, Padic::from_i64(p, p as i64, 8))
    };
    Ok([mk(0)?, mk(1)?])
}

/// Harmonizes the Shapiro cocycle at ψ to depth `m` modulo `p^prec` and
/// integrates it against the cycle.
pub fn plectic_invariant(fx: &Fixture, m: u32, prec: u32) -> Result<PlecticResult> {
    if m == 0 || m > fx.depth {
        return Err(Error::DepthExceeded(format!("depth {m} outside 1..={}", fx.depth)).at("config"));
    }
    let f = cycle_integrands(fx).map_err(|e| e.at("cycle"))?;
    let c = ShapiroCocycle::new(fx);
    let h = harmonize(fx, &c, &fx.psi, m, prec)?;
    let integral = riemann_log_integral(&h.cochain, [&f[0], &f[1]], prec).map_err(|e| e.at("integrate"))?;
    let tau = f.clone().map(|x| match x {
        Integrand::Log { tau, .. } => tau,
        Integrand::Constant(_) => unreachable!(),
    });
    let report = PlecticReport {
        label: fx.label.clone(),
        depth: m,
        cochain_digest: h.cochain.digest(),
        solver: h.stats.clone(),
        integral: integral.stats.clone(),
        precision: integral.precision,
        value: integral.value.to_strings(),
        tau: [tau[0].to_string(), tau[1].to_string()],
    };
    Ok(PlecticResult { value: integral.value.clone(), precision: integral.precision, harmonized: h, integral, tau, report })
}

/// True when the image of `t` under `m` is `t` to the precision of `t`.
pub fn is_fixed(m: &Mat2, t: &QuadExt) -> Result<bool> {
    let img = mobius(m, t)?;
    Ok(img.agreement(t) >= t.abs_prec().unwrap_or(i64::MAX).min(img.abs_prec().unwrap_or(i64::MAX)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_fixes_alpha() {
        let m = Mat2::from_i64(3, [[0, -1], [1, 0]], 20);
        let (tau, bar) = fixed_points(&m).unwrap();
        let alpha = QuadExt::alpha(3, 20);
        assert!(tau.agreement(&alpha) >= 19 || tau.agreement(&alpha.neg()) >= 19);
        assert_eq!(bar, tau.frobenius());
        assert!(is_fixed(&m, &tau).unwrap());
    }

    #[test]
    fn split_and_parabolic_maps_are_rejected() {
        let split = Mat2::from_i64(3, [[2, 0], [1, 1]], 20);
        assert!(matches!(fixed_points(&split), Err(Error::EmbeddingNotInert(_))));
        let upper = Mat2::from_i64(3, [[1, 1], [0, 1]], 20);
        assert!(matches!(fixed_points(&upper), Err(Error::EmbeddingNotInert(_))));
        // disc = −3 has odd valuation
        let ramified = Mat2::from_i64(3, [[0, -1], [1, 1]], 20);
        assert!(matches!(fixed_points(&ramified), Err(Error::EmbeddingNotInert(_))));
    }

    #[test]
    fn vieta() {
        let m = Mat2::from_i64(3, [[1, -1], [2, -1]], 20);
        let (tau, bar) = fixed_points(&m).unwrap();
        let s = tau.add(&bar);
        let prod = tau.mul(&bar);
        // τ + τ̄ = (a − d)/c, τ·τ̄ = −b/c
        assert!(s.agreement(&QuadExt::from_base(Padic::from_i64(3, 1, 20))) >= 18);
        let half = Padic::from_i64(3, 1, 20).div_int(2).unwrap();
        assert!(prod.agreement(&QuadExt::from_base(half)) >= 18);
    }
}
