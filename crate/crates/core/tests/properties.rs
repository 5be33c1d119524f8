//! Property tests for the invariants the classification relies on.

use proptest::prelude::*;

use isopar::classify::{case_witness, CaseManifold, CaseSpec, RunConfig};
use isopar::fkm::FocalSet;
use isopar::geometry::{nabla_ricci, ricci_operator_spectrum, EmbeddedGeometry, CLUSTER_GAP};
use isopar::linalg::{random_orthogonal, random_unit, round_sig, seeded_rng, sym_eigenvalues};
use isopar::orbits::{random_group_generator, HomogeneousOrbit, OrbitCase};
use isopar::{build_clifford_system, product_trace_invariant, verify_clifford_system, CliffordFamily};

fn small_system() -> impl Strategy<Value = (usize, usize, CliffordFamily)> {
    prop_oneof![
        Just((1, 3, CliffordFamily::Standard)),
        Just((1, 5, CliffordFamily::Standard)),
        Just((2, 2, CliffordFamily::Standard)),
        Just((3, 2, CliffordFamily::Standard)),
        Just((4, 2, CliffordFamily::Definite)),
        Just((4, 2, CliffordFamily::Indefinite)),
        Just((5, 1, CliffordFamily::Standard)),
        Just((6, 1, CliffordFamily::Standard)),
    ]
}

fn focal() -> impl Strategy<Value = FocalSet> {
    prop_oneof![Just(FocalSet::M1), Just(FocalSet::M2)]
}

fn orbit_case() -> impl Strategy<Value = OrbitCase> {
    prop::sample::select(OrbitCase::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn conjugation_keeps_relations_and_q(seed in any::<u64>(), k in 2usize..4, indefinite in any::<bool>()) {
        let fam = if indefinite { CliffordFamily::Indefinite } else { CliffordFamily::Definite };
        let sys = build_clifford_system(4, k, fam).unwrap();
        let q = product_trace_invariant(&sys).unwrap();
        let o = random_orthogonal(&mut seeded_rng(seed), sys.ambient_dim());
        let conj = sys.conjugated(&o);
        prop_assert!(verify_clifford_system(&conj, 1e-10).passed);
        prop_assert_eq!(product_trace_invariant(&conj).unwrap(), q);
    }

    #[test]
    fn focal_sets_are_minimal_and_cyclic_parallel(
        (m, k, fam) in small_system(),
        which in focal(),
        seed in any::<u64>(),
    ) {
        let spec = CaseSpec::otfkm(which, m, k, fam);
        let cm = CaseManifold::build(&spec, 256).unwrap();
        let mf = cm.manifold();
        let x = mf.random_point(seed).unwrap();
        let g = EmbeddedGeometry::at(mf, &x).unwrap();
        prop_assert!(g.max_trace() < 1e-9);
        prop_assert!(g.max_asymmetry() < 1e-9);
        let mut rng = seeded_rng(seed ^ 1);
        for _ in 0..5 {
            let v = random_unit(&mut rng, g.dim());
            let d = nabla_ricci(mf, &g, &v).unwrap();
            prop_assert!(v.dot(&(&d * &v)).abs() < 1e-9);
        }
    }

    #[test]
    fn ricci_spectrum_is_invariant_on_orbits(case in orbit_case(), seed in any::<u64>()) {
        let o = HomogeneousOrbit::new(case).unwrap();
        let base = EmbeddedGeometry::at(&o, &o.base_point()).unwrap();
        let g = random_group_generator(&o.data, &mut seeded_rng(seed));
        let y = o.data.to_coords(&o.data.act(&g, &o.data.z0));
        let moved = EmbeddedGeometry::at(&o, &y).unwrap();
        let a = sym_eigenvalues(&base.ricci);
        let b = sym_eigenvalues(&moved.ricci);
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() < 1e-8, "{:?} vs {:?}", ricci_operator_spectrum(&base.ricci, CLUSTER_GAP), b);
        }
    }

    #[test]
    fn case_specs_round_trip((m, k, fam) in small_system(), which in focal(), case in orbit_case()) {
        for spec in [CaseSpec::otfkm(which, m, k, fam), CaseSpec::homogeneous(case)] {
            let back: CaseSpec = spec.to_string().parse().unwrap();
            prop_assert_eq!(back, spec);
        }
    }

    #[test]
    fn rounding_is_idempotent(x in -1e12f64..1e12) {
        let r = round_sig(x, 12);
        prop_assert_eq!(round_sig(r, 12), r);
        prop_assert!((r - x).abs() <= 1e-11 * x.abs().max(1e-300));
    }
}

#[test]
fn witnesses_are_deterministic() {
    let cfg = RunConfig { seed: 5, ..RunConfig::default() };
    for case in ["otfkm:M1:3:2", "otfkm:M2:2:2", "homog:so5_cp3"] {
        let spec: CaseSpec = case.parse().unwrap();
        let a = case_witness(&spec, &cfg).unwrap();
        let b = case_witness(&spec, &cfg).unwrap();
        assert_eq!(a, b, "{case}");
    }
}
