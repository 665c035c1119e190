use plectic::bttree::{P1Point, Tree};
use plectic::cochain::{Cochain1, FiniteCochain};
use plectic::harmonize::harmonize;
use plectic::homology::cycle_integrands;
use plectic::integrate::{coboundary_invariance_check, mult_integral_single, riemann_log_integral, Integrand};
use plectic::padic::{log_q, Padic, QuadExt};
use plectic::shapiro::{Cocycle, Fixture, KappaFile};
use plectic::synthetic::{random_global_cochain, random_point, synthetic_fixture, CoboundaryCocycle, SyntheticSpec};
use plectic::tensor::TensorValue;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PREC: u32 = 30;

fn q() -> Padic {
    Padic::from_i64(3, 3, 40)
}

fn random_tau(rng: &mut ChaCha8Rng) -> QuadExt {
    let a = Padic::from_i64(3, rng.gen_range(-50..50), 40);
    let b = Padic::from_i64(3, [1, 2, 4, 5][rng.gen_range(0..4)], 40);
    QuadExt::new(a, b, -1)
}

fn distinct_points(rng: &mut ChaCha8Rng) -> (P1Point, P1Point) {
    loop {
        let (x, y) = (random_point(rng, 3, 40), random_point(rng, 3, 40));
        if x != y {
            return (x, y);
        }
    }
}

fn finite(t: &P1Point) -> Option<QuadExt> {
    match t {
        P1Point::Infinity => None,
        P1Point::Finite(x) => Some(QuadExt::from_base(x.clone())),
    }
}

/// log(((x−τ)(y−τ̄))/((x−τ̄)(y−τ))), dropping the factors at ∞.
fn closed_form(x: &P1Point, y: &P1Point, tau: &QuadExt) -> QuadExt {
    let bar = tau.frobenius();
    let mut num = QuadExt::from_base(Padic::one(3, 40));
    let mut den = num.clone();
    if let Some(x) = finite(x) {
        num = num.mul(&x.sub(tau));
        den = den.mul(&x.sub(&bar));
    }
    if let Some(y) = finite(y) {
        num = num.mul(&y.sub(&bar));
        den = den.mul(&y.sub(tau));
    }
    log_q(&num.div(&den).unwrap(), &q()).unwrap()
}

#[test]
fn dirac_tensors_match_closed_form() {
    let t = Tree::new(3);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..8 {
        let (x1, y1) = distinct_points(&mut rng);
        let (x2, y2) = distinct_points(&mut rng);
        let (tau1, tau2) = (random_tau(&mut rng), random_tau(&mut rng));
        let f1 = Integrand::log(tau1.clone(), q()).unwrap();
        let f2 = Integrand::log(tau2.clone(), q()).unwrap();
        let exact = TensorValue::tensor(&closed_form(&x1, &y1, &tau1), &closed_form(&x2, &y2, &tau2));
        let mut last = i64::MIN;
        for m in 2..=5 {
            let c = Cochain1::dirac(t, &x1, &y1, m).unwrap().tensor(&Cochain1::dirac(t, &x2, &y2, m).unwrap());
            let r = riemann_log_integral(&c, [&f1, &f2], PREC).unwrap();
            let agree = r.value.agreement(&exact);
            assert!(agree >= r.precision, "m={m}: agreement {agree} below reported {}", r.precision);
            assert!(agree >= m as i64 - 2);
            assert!(agree >= last, "digits dropped at m={m}");
            last = agree;
        }
    }
}

#[test]
fn constant_factor_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = random_global_cochain(&mut rng, 3, 4, false);
    let c = h.truncate(4).unwrap().with_modulus(2187);
    assert!(c.is_harmonic());
    let k = QuadExt::new(Padic::from_i64(3, 7, 30), Padic::from_i64(3, -2, 30), -1);
    let f = Integrand::log(random_tau(&mut rng), q()).unwrap();
    let konst = Integrand::Constant(k);
    for pair in [[&konst, &f], [&f, &konst]] {
        let r = riemann_log_integral(&c, pair, PREC).unwrap();
        assert!(r.value.is_zero(), "{}", r.value);
        assert!(r.precision >= 7);
    }
}

#[test]
fn additive_in_the_cochain() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = random_global_cochain(&mut rng, 3, 2, false).truncate(3).unwrap();
    let b = random_global_cochain(&mut rng, 3, 2, false).truncate(3).unwrap();
    let f1 = Integrand::log(random_tau(&mut rng), q()).unwrap();
    let f2 = Integrand::log(random_tau(&mut rng), q()).unwrap();
    let ra = riemann_log_integral(&a, [&f1, &f2], PREC).unwrap();
    let rb = riemann_log_integral(&b, [&f1, &f2], PREC).unwrap();
    let rab = riemann_log_integral(&a.add(&b), [&f1, &f2], PREC).unwrap();
    assert!(rab.value.agreement(&ra.value.add(&rb.value)) >= rab.precision);
}

#[test]
fn swapping_factors_transposes() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = random_global_cochain(&mut rng, 3, 3, false).truncate(3).unwrap();
    let swapped = FiniteCochain::from_fn(c.tree, c.m, c.modulus, |a, b| c.get(b, a).unwrap());
    let f1 = Integrand::log(random_tau(&mut rng), q()).unwrap();
    let f2 = Integrand::log(random_tau(&mut rng), q()).unwrap();
    let r = riemann_log_integral(&c, [&f1, &f2], PREC).unwrap();
    let s = riemann_log_integral(&swapped, [&f2, &f1], PREC).unwrap();
    assert_eq!(r.value.swap(), s.value);
}

#[test]
fn multiplicative_dirac_matches_cross_ratio() {
    let t = Tree::new(3);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let (a, b) = loop {
            let (a, b) = distinct_points(&mut rng);
            if let (P1Point::Finite(_), P1Point::Finite(_)) = (&a, &b) {
                break (a, b);
            }
        };
        let (x, y) = (random_tau(&mut rng), random_tau(&mut rng));
        let (fa, fb) = (finite(&a).unwrap(), finite(&b).unwrap());
        let exact = fa.sub(&x).mul(&fb.sub(&y)).div(&fa.sub(&y).mul(&fb.sub(&x))).unwrap();
        for m in 2..=5 {
            let c = Cochain1::dirac(t, &a, &b, m).unwrap();
            let r = mult_integral_single(&c, &x, &y, 30).unwrap();
            assert!(r.agreement(&exact) >= m as i64 - 2, "m={m}");
        }
    }
}

fn fixture(depth: u32) -> Fixture {
    Fixture::from_file(&synthetic_fixture(&SyntheticSpec::new(3, 37, depth, KappaFile::Zero)).unwrap()).unwrap()
}

#[test]
fn harmonized_output_integrates_like_clean_input() {
    let fx = fixture(3);
    let f = cycle_integrands(&fx).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for m in 1..=3 {
        let noisy = random_global_cochain(&mut rng, 3, 2, true);
        let clean_cocycle = CoboundaryCocycle { t: noisy.harmonic_part() };
        let clean = FiniteCochain::try_from_fn(fx.tree(), m, Some(2187), |a, b| clean_cocycle.eval(&fx.psi, a, b)).unwrap();
        assert!(clean.is_harmonic());
        let h = harmonize(&fx, &CoboundaryCocycle { t: noisy }, &fx.psi, m, 7).unwrap();
        let a = riemann_log_integral(&clean, [&f[0], &f[1]], PREC).unwrap();
        let b = riemann_log_integral(&h.cochain, [&f[0], &f[1]], PREC).unwrap();
        assert_eq!(a.precision, b.precision);
        assert_eq!(a.value, b.value, "m={m}");
    }
}

#[test]
fn invariance_check_detects_corruption() {
    let fx = fixture(3);
    let f = cycle_integrands(&fx).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let h = random_global_cochain(&mut rng, 3, 2, false);
    let c = h.truncate(3).unwrap().with_modulus(2187);
    let zero = FiniteCochain::zeros(fx.tree(), 3, Some(2187));
    let same = coboundary_invariance_check(&c, &zero, [&f[0], &f[1]], PREC).unwrap();
    assert!(same.agrees);
    // not a coboundary of anything fixed by the cycle
    let bad = FiniteCochain::from_fn(fx.tree(), 3, Some(2187), |a, b| ((a.idx * 7 + b.idx * 3 + u64::from(a.depth)) % 5) as i64);
    let r = coboundary_invariance_check(&c, &bad, [&f[0], &f[1]], PREC).unwrap();
    assert!(!r.agrees);
}
