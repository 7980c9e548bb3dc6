use ffverify::aklt::{
    design_catalog, overlap_trace, random_direction, random_rotation, Bond, BondOperator,
    DirectionDistribution, SpinValue,
};
use ffverify::linalg::CMatrix;
use ffverify::protocol::spectral_gap_nu;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bond(twice_j: u32, twice_k: u32) -> Bond {
    Bond::new(
        SpinValue::new(twice_j).unwrap(),
        SpinValue::new(twice_k).unwrap(),
    )
}

fn bond_strategy() -> impl Strategy<Value = Bond> {
    (1u32..=3, 1u32..=3).prop_map(|(a, b)| bond(a, b))
}

fn gap_of(b: &Bond, omega: &CMatrix<f64>) -> f64 {
    spectral_gap_nu(omega, &b.q_e::<f64>().unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn bond_gap_never_beats_isotropic(b in bond_strategy(), seed in any::<u64>(), n in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = DirectionDistribution::<f64>::random(&mut rng, n);
        let op = BondOperator::from_design(0, b, &mu).unwrap();
        prop_assert!(op.nu <= b.isotropic_gap::<f64>() + 1e-10);
        let report = op.theorem3_report().unwrap().unwrap();
        prop_assert!(report.consistent(), "{report:?}");
        prop_assert!(report.lemma5_holds(), "{report:?}");
    }

    #[test]
    fn bond_gap_is_rotation_invariant(b in bond_strategy(), seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = DirectionDistribution::<f64>::random(&mut rng, n);
        let rotated = mu.transform(&random_rotation(&mut rng)).unwrap();
        let a = BondOperator::from_design(0, b, &mu).unwrap().nu;
        let c = BondOperator::from_design(0, b, &rotated).unwrap().nu;
        prop_assert!((a - c).abs() < 1e-9, "{a} vs {c}");
    }

    #[test]
    fn bond_gap_is_concave(b in bond_strategy(), seed in any::<u64>(), p in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu1 = DirectionDistribution::<f64>::random(&mut rng, 3);
        let mu2 = DirectionDistribution::<f64>::random(&mut rng, 4);
        let o1 = b.operator(&mu1).unwrap();
        let o2 = b.operator(&mu2).unwrap();
        let mixed = b.operator(&mu1.mix(&mu2, p).unwrap()).unwrap();
        prop_assert!(gap_of(&b, &mixed) >= p * gap_of(&b, &o1) + (1.0 - p) * gap_of(&b, &o2) - 1e-10);
    }

    #[test]
    fn overlap_trace_closed_form(b in bond_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r: [f64; 3] = random_direction(&mut rng);
        let s: [f64; 3] = random_direction(&mut rng);
        let c = r[0] * s[0] + r[1] * s[1] + r[2] * s[2];
        let direct = b.overlap_trace_matrix(&r, &s).unwrap();
        prop_assert!((overlap_trace::<f64>(b.s_e(), c).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn random_designs_stay_off_the_lemma5_floor(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = DirectionDistribution::<f64>::random(&mut rng, 5);
        let r = bond(2, 2).theorem3_report(&mu).unwrap();
        prop_assert!(r.trace_sq > r.lemma5_floor + 1e-6);
        prop_assert!(!r.gap_is_optimal);
    }
}

#[test]
fn catalog_designs_reach_the_optimum_up_to_their_order() {
    // Tests use both r and −r, so the tetrahedron acts as its antipodal
    // completion, the cube.
    let orders = [
        ("tetrahedron", 3),
        ("octahedron", 3),
        ("cube", 3),
        ("icosahedron", 5),
        ("dodecahedron", 5),
    ];
    for (name, t) in orders {
        let mu = design_catalog::<f64>(name).unwrap();
        for twice in 2..=6u32 {
            let b = bond(twice.div_ceil(2), twice / 2);
            let r = b.theorem3_report(&mu).unwrap();
            assert!(r.consistent(), "{name} {twice}");
            assert_eq!(r.gap_is_optimal, twice <= t, "{name} at 2S_e = {twice}");
        }
    }
}
