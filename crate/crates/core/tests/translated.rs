use contact_core::energy::EnergySettings;
use contact_core::flow::{ContactMap, FlowMap};
use contact_core::hamiltonian::table;
use contact_core::random::perturbed_height;
use contact_core::translated::*;
use contact_core::{HamRef, ManifoldModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn sphere_h(seed: u64) -> HamRef {
    table(perturbed_height(
        0.1,
        0.03,
        &mut ChaCha8Rng::seed_from_u64(seed),
    ))
}

fn settings() -> TranslatedSettings {
    TranslatedSettings {
        n_seeds: 12,
        eta_seeds: 8,
        eta_window: Some((-1.0, 1.0)),
        seed: 11,
        ..Default::default()
    }
}

#[test]
fn records_survive_reintegration() {
    let m = ManifoldModel::sphere3();
    let h = sphere_h(1);
    let s = settings();
    let out = find_translated_points(&m, &h, &s).unwrap();
    assert!(!out.records.is_empty());
    let tight = FlowMap::new(m.clone(), h, 1e-13);
    for r in &out.records {
        assert!(r.residual_pos < s.tol && r.residual_conf < s.tol);
        let (p, c) = reverify(&tight, r, 1e-13).unwrap();
        assert!(p < 2.0 * s.tol && c < 2.0 * s.tol, "{p} {c}");
    }
}

#[test]
fn eta_shift_covariance() {
    let m = ManifoldModel::sphere3();
    let h = sphere_h(2);
    let s = settings();
    let psi: Arc<dyn ContactMap> = Arc::new(FlowMap::new(m.clone(), h, s.flow_tol()));
    let base = find_translated_points_map(&*psi, (-1.0, 1.0), &s).unwrap();
    let shifted_map = shifted_map(psi.clone(), 0.05);
    assert!(!base.records.is_empty());
    for r in &base.records {
        let moved = TranslatedRecord {
            eta: r.eta + 0.05,
            ..r.clone()
        };
        let (p, c) = reverify(&shifted_map, &moved, 1e-12).unwrap();
        assert!(p < 2.0 * s.tol && c < 2.0 * s.tol);
        let v = check_nondegeneracy(&shifted_map, &moved, 1e-12).unwrap();
        assert_eq!(v.verdict, r.verdict);
        assert_eq!(v.kernel_dim, r.kernel_dim);
    }
}

#[test]
fn certificate_on_perturbed_height() {
    let m = ManifoldModel::sphere3();
    let h = sphere_h(3);
    let out = find_translated_points(&m, &h, &settings()).unwrap();
    let e = EnergySettings::default().with_grid(16).with_time_nodes(5);
    let c = small_oscillation_certificate(&m, &h, &e, &out).unwrap();
    assert!(c.certified);
    assert!(c.all_nondegenerate);
    assert_eq!(c.expected_min_points, 2);
    assert_eq!(c.status, CertificateStatus::Satisfied, "{c:?}");
}

#[test]
fn search_is_deterministic() {
    let m = ManifoldModel::torus3();
    let h = table(contact_core::terms::TermTable::new(vec![
        contact_core::terms::Term::new(
            0.05,
            0,
            vec![contact_core::terms::Factor::Cos { coord: 0, k: 1 }],
        ),
    ]));
    let mut s = settings();
    s.n_seeds = 6;
    let a = find_translated_points(&m, &h, &s).unwrap();
    let b = find_translated_points(&m, &h, &s).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
}
