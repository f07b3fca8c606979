use contact_core::energy::{
    concat, conjugate, invert, reeb_shift_optimum, time_profile, ConformallyWeighted,
    EnergySettings, ReparamPair,
};
use contact_core::flow::{ContactMap, FlowMap};
use contact_core::hamiltonian::table;
use contact_core::random::{random_table, RandomSpec};
use contact_core::{HamRef, ManifoldModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn settings() -> EnergySettings {
    EnergySettings::default().with_grid(16).with_time_nodes(33)
}

fn ham(m: &ManifoldModel, seed: u64, amplitude: f64) -> HamRef {
    let spec = RandomSpec {
        amplitude,
        ..Default::default()
    };
    table(random_table(m, &spec, &mut ChaCha8Rng::seed_from_u64(seed)))
}

#[test]
fn symmetry_is_exact() {
    let m = ManifoldModel::torus3();
    for seed in 0..5 {
        let h = ham(&m, seed, 0.5);
        let a = time_profile(&m, &*h, &settings()).unwrap().linf();
        let b = time_profile(&m, &*invert(h), &settings()).unwrap().linf();
        assert!((a - b).abs() < 1e-9, "{a} {b}");
    }
}

#[test]
fn triangle_inequality_for_concatenation() {
    let m = ManifoldModel::torus3();
    for seed in 0..5 {
        let f = ham(&m, 100 + seed, 0.5);
        let g = ham(&m, 200 + seed, 0.5);
        let s = settings().with_time_nodes(129);
        let ef = time_profile(&m, &*f, &s).unwrap().linf();
        let eg = time_profile(&m, &*g, &s).unwrap().linf();
        let h = concat(f, g, ReparamPair::default()).unwrap();
        let eh = time_profile(&m, &*h, &s).unwrap().linf();
        assert!(eh <= ef + eg + 1e-6, "{eh} > {ef} + {eg}");
    }
}

#[test]
fn naturality_of_conjugation() {
    let m = ManifoldModel::torus3();
    let s = settings().with_time_nodes(9);
    for seed in 0..2 {
        let h = ham(&m, 300 + seed, 0.5);
        let psi: Arc<dyn ContactMap> =
            Arc::new(FlowMap::new(m.clone(), ham(&m, 400 + seed, 0.15), 1e-11));
        let g = conjugate(h.clone(), psi.clone());
        let lhs = time_profile(&m, &*g, &s).unwrap().linf();
        let rhs = time_profile(&m, &ConformallyWeighted::new(h, psi), &s)
            .unwrap()
            .linf();
        assert!((lhs - rhs).abs() < 1e-4, "{lhs} vs {rhs}");
    }
}

#[test]
fn reeb_shift_identity() {
    let m = ManifoldModel::torus3();
    for seed in 0..5 {
        let h = ham(&m, 500 + seed, 0.5);
        let (shift, profile) = reeb_shift_optimum(&m, &h, &settings()).unwrap();
        for (n, b) in profile.nodes.iter().zip(&shift.b_star) {
            assert_eq!(*b, 0.5 * (n.max + n.min));
        }
        assert!(
            (shift.shifted_energy - shift.half_osc).abs() < 5.0 * shift.quadrature_bound.max(1e-12),
            "{shift:?}"
        );
    }
}
