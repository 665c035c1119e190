use plectic::cochain::FiniteCochain;
use plectic::harmonize::{compute_degenerations, harmonize, lift_system, Modulus};
use plectic::shapiro::{Fixture, KappaFile, ShapiroCocycle};
use plectic::synthetic::{random_global_cochain, synthetic_fixture, CoboundaryCocycle, SyntheticSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture(depth: u32, kappa: KappaFile) -> Fixture {
    Fixture::from_file(&synthetic_fixture(&SyntheticSpec::new(3, 37, depth, kappa)).unwrap()).unwrap()
}

#[test]
fn noisy_coboundary_becomes_harmonic() {
    let fx = fixture(3, KappaFile::Zero);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for m in 1..=3 {
        let t = random_global_cochain(&mut rng, 3, 2, true);
        let c = CoboundaryCocycle { t };
        let raw = FiniteCochain::try_from_fn(fx.tree(), m, Some(2187), |a, b| plectic::shapiro::Cocycle::eval(&c, &fx.psi, a, b)).unwrap();
        assert!(!raw.is_harmonic(), "noise should break harmonicity at m={m}");
        let h = harmonize(&fx, &c, &fx.psi, m, 7).unwrap();
        assert!(h.cochain.is_harmonic());
        assert_eq!(h.stats.nonunit_pivots, 0);
    }
}

#[test]
fn shapiro_cocycles() {
    let fx = fixture(3, KappaFile::Zero);
    let c = ShapiroCocycle::new(&fx);
    let h = harmonize(&fx, &c, &fx.psi, 3, 7).unwrap();
    assert!(h.cochain.vals.iter().all(|&x| x == 0));
    // this ψ has χ(ψ) = 2 for the determinant character χ
    let fx = fixture(3, KappaFile::DetValuation { ell: 2 });
    let c = ShapiroCocycle::new(&fx);
    for m in 1..=3 {
        assert_eq!(fx.kappa.kappa(&fx.psi.g).unwrap(), 2);
        let err = harmonize(&fx, &c, &fx.psi, m, 7).unwrap_err();
        assert_eq!(err.class(), "LiftInconsistent", "m={m}: {err}");
    }
}

#[test]
fn sparse_and_dense_solvers_agree_at_depth_one() {
    let fx = fixture(2, KappaFile::Zero);
    let md = Modulus::new(3, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let c = CoboundaryCocycle { t: random_global_cochain(&mut rng, 3, 2, true) };
        let deg = compute_degenerations(&fx, &c, 1, &md).unwrap();
        let sys = lift_system(&fx.tree(), &deg, &md);
        assert!(sys.ncols <= 200);
        let (x, _) = sys.solve(&md).unwrap();
        let y = sys.solve_dense(&md).unwrap();
        assert!(sys.is_solution(&x, &md) && sys.is_solution(&y, &md));
    }
}

#[test]
fn result_is_independent_of_thread_count() {
    let fx = fixture(3, KappaFile::Zero);
    let t = random_global_cochain(&mut ChaCha8Rng::seed_from_u64(5), 3, 3, true);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let c = CoboundaryCocycle { t: t.clone() };
            harmonize(&fx, &c, &fx.psi, 3, 7).unwrap().cochain.digest()
        })
    };
    assert_eq!(run(1), run(4));
}
