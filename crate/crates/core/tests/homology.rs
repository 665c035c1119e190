use plectic::cochain::FiniteCochain;
use plectic::homology::{cycle_integrands, fixed_points, is_fixed, plectic_invariant};
use plectic::integrate::{riemann_log_integral, Integrand};
use plectic::shapiro::{Fixture, KappaFile};
use plectic::synthetic::{random_global_cochain, synthetic_fixture, SyntheticSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture(depth: u32, kappa: KappaFile) -> Fixture {
    Fixture::from_file(&synthetic_fixture(&SyntheticSpec::new(3, 37, depth, kappa)).unwrap()).unwrap()
}

#[test]
fn psi_fixed_points_are_conjugate_and_fixed() {
    let fx = fixture(2, KappaFile::Zero);
    for side in 0..2 {
        let g = &fx.psi.local[side];
        let (tau, bar) = fixed_points(g).unwrap();
        assert!(is_fixed(g, &tau).unwrap() && is_fixed(g, &bar).unwrap());
        assert_eq!(tau.frobenius(), bar);
        assert_ne!(tau, bar);
    }
}

#[test]
fn zero_kappa_gives_zero() {
    let fx = fixture(2, KappaFile::Zero);
    for m in 1..=2 {
        let r = plectic_invariant(&fx, m, 7).unwrap();
        assert!(r.value.is_zero());
        assert!(r.precision >= 1);
        assert_eq!(r.report.depth, m);
    }
}

/// For a global character χ the induced cocycle is `ψ⋆F − F + χ(ψ)`, and a
/// nonzero constant cannot be harmonized away.
#[test]
fn character_cocycle_lifts_iff_it_vanishes_on_psi() {
    for depth in 1..=4 {
        let fx = fixture(depth, KappaFile::DetValuation { ell: 2 });
        let chi = fx.kappa.kappa(&fx.psi.g).unwrap();
        match plectic_invariant(&fx, depth.min(2), 7) {
            Ok(r) => {
                assert_eq!(chi, 0, "depth {depth}");
                assert!(r.value.is_zero());
            }
            Err(e) => {
                assert_ne!(chi, 0, "depth {depth}: {e}");
                assert_eq!(e.class(), "LiftInconsistent");
            }
        }
    }
}

#[test]
fn depth_beyond_fixture_is_rejected() {
    let fx = fixture(1, KappaFile::Zero);
    let err = plectic_invariant(&fx, 2, 7).err().unwrap();
    assert_eq!(err.class(), "DepthExceeded");
}

#[test]
fn swapping_fixed_points_negates() {
    let fx = fixture(3, KappaFile::Zero);
    let f = cycle_integrands(&fx).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let c: FiniteCochain = random_global_cochain(&mut rng, 3, 3, false).truncate(3).unwrap().with_modulus(2187);
    let flip = |g: &Integrand| match g {
        Integrand::Log { tau, q } => Integrand::Log { tau: tau.frobenius(), q: q.clone() },
        k => k.clone(),
    };
    let base = riemann_log_integral(&c, [&f[0], &f[1]], 30).unwrap();
    let one = riemann_log_integral(&c, [&flip(&f[0]), &f[1]], 30).unwrap();
    let both = riemann_log_integral(&c, [&flip(&f[0]), &flip(&f[1])], 30).unwrap();
    assert!(one.value.agreement(&base.value.neg()) >= base.precision);
    assert!(both.value.agreement(&base.value) >= base.precision);
    assert!(!base.value.is_zero());
}
