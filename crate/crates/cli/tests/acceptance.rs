//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Pass criterion numbers as arguments to
//! run a subset: `cargo test --test acceptance -- 3 8`.

use std::error::Error;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use contact_cli::config::{AxiomOptions, ExperimentConfig};
use contact_cli::Task;
use contact_core::capacity::{
    displacement_check_map, energy_capacity_audit, hat_c, BoxSet, Displacement,
};
use contact_core::energy::{
    calabi_weinstein, osc_sandwich, reeb_shift_optimum, rescale_form_energy, time_profile,
    EnergySettings,
};
use contact_core::flow::{integrate_isotopy, pullback_residual_along, FlowMap, ReebMap};
use contact_core::geometry::solve_reeb;
use contact_core::hamiltonian::{constant, table};
use contact_core::random::{
    perturbed_height, random_positive, random_strict_table, random_table, RandomSpec,
};
use contact_core::symplectization::{
    lift_differential, lift_differential_fd, usher_reverse, verify_cutoff, verify_usher,
    CutoffCheckSettings, CutoffProfile,
};
use contact_core::terms::{Factor, Term, TermTable};
use contact_core::translated::{
    find_translated_points, find_translated_points_map, grid_oracle, small_oscillation_certificate,
    CertificateStatus, TranslatedSettings, Verdict,
};
use contact_core::{HamRef, ManifoldModel, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), Box<dyn Error>>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn torus_ham(seed: u64, amplitude: f64) -> HamRef {
    let spec = RandomSpec {
        amplitude,
        ..Default::default()
    };
    table(random_table(
        &ManifoldModel::torus3(),
        &spec,
        &mut rng(seed),
    ))
}

fn energy(grid: usize, nodes: usize) -> EnergySettings {
    EnergySettings::default()
        .with_grid(grid)
        .with_time_nodes(nodes)
}

/// 1. Reeb solver residuals and closed-form agreement.
fn reeb_solver() -> Outcome {
    let mut worst_eq = 0.0f64;
    let mut worst_cf = 0.0f64;
    for (k, m) in [
        ManifoldModel::circle(),
        ManifoldModel::torus3(),
        ManifoldModel::sphere3(),
    ]
    .into_iter()
    .enumerate()
    {
        let mut r = rng(100 + k as u64);
        for _ in 0..1000 {
            let x = m.random_point(&mut r);
            let reeb = solve_reeb(&m, &x)?;
            let iota = m.dalpha(&x) * &reeb;
            let iota = if m.is_constrained() {
                m.frame(&x).transpose() * iota
            } else {
                iota
            };
            worst_eq = worst_eq
                .max((m.alpha(&x).dot(&reeb) - 1.0).abs())
                .max(iota.amax());
            let closed = m.reeb_closed_form(&x).ok_or("missing closed form")?;
            worst_cf = worst_cf.max((closed - reeb).amax());
        }
    }
    Ok((
        worst_eq < 1e-9 && worst_cf < 1e-9,
        format!("equation residual {worst_eq:.2e}, closed-form gap {worst_cf:.2e}"),
    ))
}

/// 2. Pullback identity along flows and strictness of strict flows.
fn flow_invariance() -> Outcome {
    let m = ManifoldModel::torus3();
    let mut r = rng(200);
    let mut pull = 0.0f64;
    let mut strict_g = 0.0f64;
    for i in 0..20 {
        let h = torus_ham(2000 + i, 0.5);
        for _ in 0..2 {
            let x = m.random_point(&mut r);
            pull = pull.max(pullback_residual_along(&m, &*h, &x, 4, 1e-10)?);
        }
        let s = table(
            random_strict_table(&m, &RandomSpec::default(), &mut r).ok_or("no strict table")?,
        );
        let tr = integrate_isotopy(&m, &*s, &m.random_point(&mut r), 1e-10)?;
        strict_g = strict_g.max(tr.logconf.iter().fold(0.0, |a, g| a.max(g.abs())));
    }
    Ok((
        pull < 1e-6 && strict_g < 1e-9,
        format!("pullback residual {pull:.2e}, strict |g| {strict_g:.2e}"),
    ))
}

/// 3. Symmetry, triangle and naturality through the `axioms` task runner.
fn norm_axioms() -> Outcome {
    let cfg = ExperimentConfig::from_json_str(
        r#"{"manifold": "Torus3", "task": "axioms", "seed": 3003}"#,
    )?;
    let cfg = ExperimentConfig {
        task: Task::Axioms,
        axioms: AxiomOptions {
            hamiltonians: 20,
            naturality_cases: 10,
            ..Default::default()
        },
        ..cfg
    };
    let out = contact_cli::run(&cfg)?;
    let s = &out.report["results"]["summary"];
    let get = |k: &str| s[k].as_f64().unwrap_or(f64::NAN);
    let (sym, tri, nat) = (
        get("symmetry_residual_max"),
        get("triangle_slack_min"),
        get("naturality_residual_max"),
    );
    Ok((
        sym < 1e-9 && tri >= -1e-6 && nat < 1e-4,
        format!(
            "symmetry {sym:.2e}, triangle slack min {tri:.2e} (20 pairs), naturality {nat:.2e} (10 cases){}",
            if out.failures.is_empty() { String::new() } else { format!("; {}", out.failures.join("; ")) }
        ),
    ))
}

/// 4. Optimal Reeb shift.
fn reeb_shift() -> Outcome {
    let m = ManifoldModel::torus3();
    let mut worst_ratio = 0.0f64;
    let mut exact = true;
    for i in 0..20 {
        let h = torus_ham(4000 + i, 0.5);
        let (shift, p) = reeb_shift_optimum(&m, &h, &energy(16, 33))?;
        exact &= p
            .nodes
            .iter()
            .zip(&shift.b_star)
            .all(|(n, b)| *b == 0.5 * (n.max + n.min));
        let allowed = 5.0 * shift.quadrature_bound.max(1e-12);
        worst_ratio = worst_ratio.max((shift.shifted_energy - shift.half_osc).abs() / allowed);
    }
    Ok((
        exact && worst_ratio < 1.0,
        format!("b* exact on grid: {exact}, worst residual / (5 x bound) = {worst_ratio:.2e}"),
    ))
}

/// 5. Reversed path: endpoint and pointwise identities.
fn usher() -> Outcome {
    let m = ManifoldModel::torus3();
    let mut r = rng(500);
    let (mut u1, mut u2) = (0.0f64, 0.0f64);
    for i in 0..5 {
        let k = usher_reverse(&m, torus_ham(5000 + i, 0.4), 1e-11);
        let ends: Vec<Point> = (0..10).map(|_| m.random_point(&mut r)).collect();
        let samples: Vec<(f64, Point, f64)> = (0..50)
            .map(|_| {
                (
                    r.gen_range(0.0..1.0),
                    m.random_point(&mut r),
                    r.gen_range(0.5..2.0),
                )
            })
            .collect();
        let rep = verify_usher(&k, &ends, &samples, 1e-10)?;
        u1 = u1.max(rep.u1_residual);
        u2 = u2.max(rep.u2_residual);
    }
    Ok((
        u1 < 1e-5 && u2 < 1e-4,
        format!("U1 endpoint {u1:.2e}, U2 pointwise {u2:.2e}"),
    ))
}

/// 6. Cutoff agreement inside the band and the energy inequality.
fn cutoff() -> Outcome {
    let m = ManifoldModel::torus3();
    let mut r = rng(600);
    let (mut c1, mut c2) = (0.0f64, f64::INFINITY);
    let settings = CutoffCheckSettings {
        c1_samples: 10,
        c2_samples: 16,
        ..Default::default()
    };
    let mut c1_count = 0;
    for i in 0..5 {
        let a = r.gen_range(0.6..0.9);
        let b = a * r.gen_range(1.3..1.8);
        let delta = r.gen_range(0.05..0.2);
        let profile = CutoffProfile::new(a, b, delta)?;
        let pts: Vec<Point> = (0..16).map(|_| m.random_point(&mut r)).collect();
        let rs: Vec<f64> = (0..16).map(|_| r.gen_range(a..b)).collect();
        let rep = verify_cutoff(&m, &torus_ham(6000 + i, 0.3), profile, &settings, &pts, &rs)?;
        c1 = c1.max(rep.c1_residual);
        c2 = c2.min(rep.c2_slack);
        c1_count += rep.c1_samples;
    }
    Ok((
        c1 < 1e-5 && c2 >= -1e-4,
        format!("C1 residual {c1:.2e} on {c1_count} in-band samples, C2 slack min {c2:.2e}"),
    ))
}

/// 7. Block formula for the lifted differential against finite differences.
fn lift_differential_check() -> Outcome {
    let m = ManifoldModel::torus3();
    let mut r = rng(700);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let map = FlowMap::new(m.clone(), torus_ham(7000 + i / 10, 0.4), 1e-12);
        let x = m.random_point(&mut r);
        let a = lift_differential(&map, &x)?;
        let b = lift_differential_fd(&map, &x, 1e-5)?;
        worst = worst.max((a - b).amax());
    }
    Ok((
        worst < 1e-4,
        format!("max entry gap {worst:.2e} on 50 points"),
    ))
}

/// 8. Hopf-circle families and Reeb elements on the sphere.
fn hopf_families() -> Outcome {
    let m = ManifoldModel::sphere3();
    let (a, b) = (0.3, 0.1);
    let pow2 = |coord| Factor::Pow { coord, p: 2 };
    let h = table(TermTable::new(vec![
        Term::new(a, 0, vec![pow2(0)]),
        Term::new(a, 0, vec![pow2(1)]),
        Term::new(b, 0, vec![pow2(2)]),
        Term::new(b, 0, vec![pow2(3)]),
    ]));
    let s = TranslatedSettings {
        eta_window: Some((0.0, 0.5)),
        n_seeds: 16,
        eta_seeds: 8,
        seed: 8,
        ..Default::default()
    };
    let search = find_translated_points(&m, &h, &s)?;
    let mut etas: Vec<f64> = search.families.iter().map(|f| f.eta_mod).collect();
    etas.sort_by(f64::total_cmp);
    let two = search.families.len() == 2 && search.isolated().count() == 0;
    let eta_gap = if etas.len() == 2 {
        (etas[0] - b).abs().max((etas[1] - a).abs())
    } else {
        f64::INFINITY
    };
    let map = FlowMap::new(m.clone(), h, s.flow_tol());
    let oracle = grid_oracle(&map, &search, 20, 64, s.flow_tol())?;

    let reeb = ReebMap::new(m.clone(), 0.2);
    let rs = TranslatedSettings {
        n_seeds: 8,
        eta_seeds: 4,
        ..s.clone()
    };
    let elem = find_translated_points_map(&reeb, (0.0, 0.5), &rs)?;
    let reeb_ok = elem.has_whole_manifold_family()
        && elem.families.iter().all(|f| f.kernel_dim == 3)
        && elem
            .records
            .iter()
            .all(|r| r.verdict == Verdict::Degenerate && r.kernel_dim == 3);
    Ok((
        two && eta_gap < 1e-6 && oracle.complete() && reeb_ok,
        format!(
            "{} families at eta {:?} (gap {eta_gap:.2e}), {} isolated, oracle hits {} unmatched {}, Reeb element kernel_dim 3: {reeb_ok}",
            search.families.len(),
            etas,
            search.isolated().count(),
            oracle.hits,
            oracle.unmatched.len()
        ),
    ))
}

/// 9. Small-oscillation certificate on perturbed height functions.
fn small_oscillation() -> Outcome {
    let m = ManifoldModel::sphere3();
    let s = TranslatedSettings {
        eta_window: Some((-1.0, 1.0)),
        n_seeds: 16,
        eta_seeds: 8,
        seed: 9,
        ..Default::default()
    };
    let mut found = Vec::new();
    let mut ok = true;
    for i in 0..5 {
        let h = table(perturbed_height(0.1, 0.03, &mut rng(9000 + i)));
        let search = find_translated_points(&m, &h, &s)?;
        let c = small_oscillation_certificate(&m, &h, &energy(16, 5), &search)?;
        ok &= c.certified && c.status == CertificateStatus::Satisfied && c.found_points >= 2;
        found.push(c.found_points);
    }
    Ok((
        ok,
        format!("non-degenerate points found per H: {found:?} (need >= 2)"),
    ))
}

/// 10. Energy–capacity audits on displaced boxes and exact scale invariance.
fn audits() -> Outcome {
    let mut r = rng(1000);
    let e = energy(16, 5);
    let mut cases: Vec<(ManifoldModel, f64, BoxSet)> = Vec::new();
    for _ in 0..7 {
        let w = r.gen_range(0.02..0.2);
        let a = r.gen_range(0.0..1.0);
        let r0 = r.gen_range(0.3..1.5);
        let b = BoxSet::chart(vec![(a, a + w)], (r0, r0 * r.gen_range(1.1..2.0)))?;
        cases.push((
            ManifoldModel::circle(),
            r.gen_range(w + 0.05..1.0 - w - 0.05),
            b,
        ));
    }
    for _ in 0..7 {
        let tp = r.gen_range(0.01..0.1);
        let delta = r.gen_range(0.1..0.3);
        let b = BoxSet::heisenberg_a(tp, delta, tp / (1.6 * delta))?;
        let theta_w = tp / (1.0 - 2.0 * delta);
        cases.push((
            ManifoldModel::heisenberg(),
            r.gen_range(theta_w + 0.05..0.9 - theta_w),
            b,
        ));
    }
    for _ in 0..6 {
        let w = r.gen_range(0.05..0.2);
        let x0 = r.gen_range(0.0..1.0);
        let y0 = r.gen_range(0.0..1.0);
        let p0 = r.gen_range(0.5..0.8);
        let b = BoxSet::torus_darboux((p0, p0 + 0.2), (x0, x0 + w), (0.0, 0.1), (y0, y0 + 0.1))?;
        cases.push((ManifoldModel::torus3(), r.gen_range(w + 0.1..0.7), b));
    }
    let mut worst = f64::INFINITY;
    let mut displaced = 0;
    let mut scale_exact = true;
    for (k, (m, c, b)) in cases.iter().enumerate() {
        let h = constant(*c);
        let map = FlowMap::new(m.clone(), h.clone(), 1e-10);
        let d = displacement_check_map(&map, b, 200, 1e-3, k as u64)?;
        if d.verdict != Displacement::Displaced {
            continue;
        }
        displaced += 1;
        worst = worst.min(energy_capacity_audit(m, &h, b, &d, &e)?.slack);
        let base = hat_c(b)?;
        for _ in 0..10 {
            let lambda = 10f64.powf(r.gen_range(-3.0..3.0));
            scale_exact &= hat_c(&b.scaled(lambda))? == base;
        }
    }
    Ok((
        displaced == 20 && worst >= -1e-6 && scale_exact,
        format!("{displaced}/20 displaced, min slack {worst:.3e}, hat_c scale invariance exact: {scale_exact}"),
    ))
}

/// 11. Pathwise sandwiches for the oscillation split and form rescaling.
fn sandwiches() -> Outcome {
    let m = ManifoldModel::torus3();
    let mut r = rng(1100);
    let (mut sandwich, mut resc) = (f64::INFINITY, f64::INFINITY);
    for i in 0..20 {
        let h = torus_ham(11000 + i, 0.5);
        let f = table(random_positive(&m, 0.6, &mut r));
        let s = energy(12, 17);
        let b = osc_sandwich(&time_profile(&m, &*h, &s)?);
        sandwich = sandwich.min(b.lower_slack).min(b.upper_slack);
        let rep = rescale_form_energy(&m, &f, &h, &s)?;
        resc = resc.min(rep.lower_slack).min(rep.upper_slack);
    }
    Ok((
        sandwich >= -1e-6 && resc >= -1e-6,
        format!("oscillation sandwich slack min {sandwich:.2e}, rescaling sandwich slack min {resc:.2e}"),
    ))
}

/// 12. Calabi–Weinstein invariant.
fn calabi_weinstein_check() -> Outcome {
    let m = ManifoldModel::torus3();
    let s = energy(12, 17);
    let mut const_gap = 0.0f64;
    for kappa in [-2.0, 0.5, 3.0] {
        let h = constant(kappa);
        let cw = calabi_weinstein(&m, &*h, &time_profile(&m, &*h, &s)?)?;
        const_gap = const_gap.max((cw.value - kappa).abs());
    }
    let mut r = rng(1200);
    let mut worst = f64::INFINITY;
    let mut strict = true;
    for _ in 0..20 {
        let h = table(
            random_strict_table(&m, &RandomSpec::default(), &mut r).ok_or("no strict table")?,
        );
        let p = time_profile(&m, &*h, &s)?;
        let cw = calabi_weinstein(&m, &*h, &p)?;
        strict &= cw.strict;
        worst = worst.min(p.linf() + 1e-6 - cw.value.abs());
    }
    Ok((
        const_gap < 1e-9 && worst >= 0.0 && strict,
        format!("constant paths gap {const_gap:.2e}, min (E_inf + 1e-6 - |cw|) = {worst:.2e}"),
    ))
}

/// 13. Byte-identical artifacts across repeated CLI runs.
fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("contactlab-acceptance-{}", std::process::id()));
    let configs = [
        r#"{"manifold": "Torus3", "task": "flow", "seed": 5,
            "hamiltonian": {"terms": [{"coeff": 0.3, "time_power": 1, "factors": [{"kind": "cos", "coord": 0, "k": 1}]},
                                      {"coeff": 0.2, "factors": [{"kind": "sin", "coord": 2, "k": 1}]}]},
            "flow": {"points": 3, "intervals": 16, "checkpoints": 2}}"#,
        r#"{"manifold": "SphereS3", "task": "translated", "seed": 6,
            "hamiltonian": {"terms": [{"coeff": 0.1, "factors": [{"kind": "pow", "coord": 0, "p": 1}]},
                                      {"coeff": 0.02, "factors": [{"kind": "pow", "coord": 1, "p": 2}]}]},
            "translated": {"n_seeds": 8, "eta_seeds": 4, "eta_window": [-1.0, 1.0]},
            "energy": {"time_nodes": 5, "grid_per_dim": 8, "refinements": 5, "candidates": 2}}"#,
        r#"{"manifold": "Torus3", "task": "axioms", "seed": 7,
            "axioms": {"hamiltonians": 4, "naturality_cases": 1, "triangle_time_nodes": 129}}"#,
    ];
    let mut compared = 0;
    let mut identical = true;
    for (i, cfg) in configs.iter().enumerate() {
        let path = dir.join(format!("config{i}.json"));
        fs::create_dir_all(&dir)?;
        fs::write(&path, cfg)?;
        let mut runs = Vec::new();
        for rep in 0..2 {
            let out = dir.join(format!("run{i}_{rep}"));
            let status = Command::new(env!("CARGO_BIN_EXE_contactlab"))
                .arg("--config")
                .arg(&path)
                .arg("--out")
                .arg(&out)
                .arg("--quiet")
                .status()?;
            if status.code() == Some(1) {
                return Err(format!("run {i} failed").into());
            }
            runs.push(out);
        }
        for file in csv_files(&runs[0])? {
            let rel = file.strip_prefix(&runs[0])?;
            identical &= fs::read(&file)? == fs::read(runs[1].join(rel))?;
            compared += 1;
        }
    }
    let _ = fs::remove_dir_all(&dir);
    Ok((
        identical && compared > 0,
        format!("{compared} CSV files compared, identical: {identical}"),
    ))
}

fn csv_files(root: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    for sub in ["tables", "plotdata"] {
        let d = root.join(sub);
        if d.is_dir() {
            for e in fs::read_dir(d)? {
                out.push(e?.path());
            }
        }
    }
    out.sort();
    Ok(out)
}

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria: [Criterion; 13] = [
        ("Reeb solver", reeb_solver),
        ("flow contact invariance", flow_invariance),
        ("norm axioms", norm_axioms),
        ("Reeb-shift identity", reeb_shift),
        ("reversed path U1/U2", usher),
        ("cutoff C1/C2", cutoff),
        ("lift differential", lift_differential_check),
        ("translated points on S3", hopf_families),
        ("small-oscillation certificate", small_oscillation),
        ("energy-capacity audits", audits),
        ("sandwich inequalities", sandwiches),
        ("Calabi-Weinstein", calabi_weinstein_check),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {n:>2} {}: {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
