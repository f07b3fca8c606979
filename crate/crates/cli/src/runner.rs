//! One runner per task. Each returns its artifacts; checks that fail are
//! collected as messages instead of aborting the run.

use std::sync::Arc;

use contact_core::capacity::{
    displacement_check_map, energy_capacity_audit, gromov_lower_bound, hat_c, height, volume_cap,
    Displacement,
};
use contact_core::energy::{
    concat, conjugate, energy_report, invert, osc_sandwich, profile_csv, reeb_shift_optimum,
    time_profile, ConformallyWeighted, EnergySettings, ReparamPair,
};
use contact_core::flow::{integrate_isotopy_sampled, pullback_residual_along, ContactMap, FlowMap};
use contact_core::geometry::{verify_contact_condition, ContactFrame};
use contact_core::hamiltonian::table;
use contact_core::random::{random_table, RandomSpec};
use contact_core::translated::{
    find_translated_points, grid_oracle, small_oscillation_certificate, CertificateStatus,
    TranslatedSettings,
};
use contact_core::{HamRef, ManifoldModel, Point, TimeHamiltonian};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Task};
use crate::error::CliError;
use crate::report::{csv, envelope, log_histogram, num, Artifacts};

pub const PULLBACK_TOL: f64 = 1e-6;
pub const STRICT_G_TOL: f64 = 1e-9;
pub const SYMMETRY_TOL: f64 = 1e-9;
pub const TRIANGLE_TOL: f64 = 1e-6;
pub const NATURALITY_TOL: f64 = 1e-4;
/// Allowed `|dH(R)|` for a path to count as strict.
const STRICT_SAMPLE_TOL: f64 = 1e-12;

/// Validates `cfg`, runs its task and wraps the results in the report envelope.
pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let m = cfg.validate()?;
    let h = cfg.hamiltonian.clone().map(table);
    let mut out = Artifacts::default();
    let results = match cfg.task {
        Task::Flow => run_flow(cfg, &m, need(&h)?, &mut out)?,
        Task::Energy => run_energy(cfg, &m, need(&h)?, &mut out)?,
        Task::Translated => run_translated(cfg, &m, need(&h)?, &mut out)?,
        Task::Capacity => run_capacity(cfg, &m, need(&h)?, &mut out)?,
        Task::Axioms => run_axioms(cfg, &m, &mut out)?,
    };
    out.report = envelope(cfg, &m, results, &out.failures);
    Ok(out)
}

fn need(h: &Option<HamRef>) -> Result<&HamRef, CliError> {
    h.as_ref()
        .ok_or_else(|| CliError::schema("hamiltonian", "required for this task"))
}

fn max_reeb_derivative(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    t: f64,
    x: &Point,
) -> Result<f64, CliError> {
    let r = ContactFrame::at(m, x)?.reeb();
    let (_, g) = h.eval_grad(t, x);
    Ok(g.dot(&r).abs())
}

fn run_flow(
    cfg: &ExperimentConfig,
    m: &ManifoldModel,
    h: &HamRef,
    out: &mut Artifacts,
) -> Result<Value, CliError> {
    let opts = &cfg.flow;
    let tol = cfg.tolerances.flow;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let contact = verify_contact_condition(m, 256, cfg.seed);
    if !contact.pass {
        out.failures
            .push(format!("contact condition fails on {}", m.name()));
    }
    let mut rows = Vec::new();
    let mut per_point = Vec::new();
    let mut logconf_columns: Vec<Vec<f64>> = Vec::new();
    let mut times = Vec::new();
    for i in 0..opts.points {
        let x0 = m.random_point(&mut rng);
        let tr = integrate_isotopy_sampled(m, &**h, &x0, tol, opts.intervals.max(1))?;
        let pullback = pullback_residual_along(m, &**h, &x0, opts.checkpoints, tol)?;
        let mut strict_defect = 0.0f64;
        for (t, y) in tr.times.iter().zip(&tr.points) {
            strict_defect = strict_defect.max(max_reeb_derivative(
                m,
                &**h,
                *t,
                &Point::from_column_slice(y),
            )?);
        }
        let strict = strict_defect < STRICT_SAMPLE_TOL;
        let max_g = tr.logconf.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if pullback >= PULLBACK_TOL {
            out.failures.push(format!(
                "point {i}: pullback residual {pullback:e} >= {PULLBACK_TOL:e}"
            ));
        }
        if strict && max_g >= STRICT_G_TOL {
            out.failures
                .push(format!("point {i}: strict flow has |g| = {max_g:e}"));
        }
        let end = tr.endpoint();
        let mut row = vec![i.to_string()];
        row.extend(x0.iter().map(|v| num(*v)));
        row.extend(end.iter().map(|v| num(*v)));
        row.extend([
            num(tr.final_logconf()),
            num(max_g),
            num(pullback),
            strict.to_string(),
        ]);
        rows.push(row);
        per_point.push(json!({
            "index": i,
            "trace": tr.summary_json(),
            "pullback_residual": pullback,
            "max_abs_logconf": max_g,
            "strict": strict,
        }));
        out.tables.insert(format!("trace_{i:03}"), tr.to_csv());
        times = tr.times.clone();
        logconf_columns.push(tr.logconf.clone());
    }
    let n = m.ambient_dim();
    let mut header: Vec<String> = vec!["point".into()];
    header.extend((0..n).map(|k| format!("x0_{k}")));
    header.extend((0..n).map(|k| format!("x1_{k}")));
    header.extend(["g1", "max_abs_g", "pullback_residual", "strict"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.tables.insert("flow_summary".into(), csv(&header, rows));

    let mut plot_header = vec!["t".to_string()];
    plot_header.extend((0..logconf_columns.len()).map(|i| format!("g_{i:03}")));
    let plot_header: Vec<&str> = plot_header.iter().map(String::as_str).collect();
    let plot_rows = times.iter().enumerate().map(|(k, t)| {
        let mut row = vec![num(*t)];
        row.extend(logconf_columns.iter().map(|c| num(c[k])));
        row
    });
    out.plotdata
        .insert("logconf".into(), csv(&plot_header, plot_rows));

    Ok(json!({
        "contact_condition": contact,
        "points": per_point,
        "thresholds": { "pullback": PULLBACK_TOL, "strict_logconf": STRICT_G_TOL },
    }))
}

fn run_energy(
    cfg: &ExperimentConfig,
    m: &ManifoldModel,
    h: &HamRef,
    out: &mut Artifacts,
) -> Result<Value, CliError> {
    let s = &cfg.energy;
    let (report, profile) = energy_report(m, &**h, s)?;
    let (shift, _) = reeb_shift_optimum(m, h, s)?;
    let sandwich = osc_sandwich(&profile);
    let osc_bound = profile.quadrature_bound(|n| n.osc(), 2.0);
    if profile.osc() > 2.0 * profile.linf() + osc_bound + 1e-12 {
        out.failures.push(format!(
            "osc {} exceeds 2·linf {}",
            profile.osc(),
            2.0 * profile.linf()
        ));
    }
    if sandwich.lower_slack < -1e-12 || sandwich.upper_slack < -1e-12 {
        out.failures
            .push(format!("pathwise sandwich violated: {sandwich:?}"));
    }
    let shift_residual = (shift.shifted_energy - shift.half_osc).abs();
    let shift_allowed = 5.0 * shift.quadrature_bound.max(1e-12);
    if shift_residual >= shift_allowed {
        out.failures.push(format!(
            "Reeb shift residual {shift_residual:e} >= {shift_allowed:e}"
        ));
    }
    out.tables
        .insert("energy_profile".into(), profile_csv(&profile));
    out.plotdata.insert(
        "energy_integrands".into(),
        csv(
            &["t", "linf_integrand", "osc_integrand", "mean"],
            profile
                .nodes
                .iter()
                .map(|n| vec![num(n.t), num(n.maxabs), num(n.osc()), num(n.mean)]),
        ),
    );
    Ok(json!({
        "energy": report,
        "reeb_shift": {
            "shifted_energy": shift.shifted_energy,
            "half_osc": shift.half_osc,
            "residual": shift_residual,
            "quadrature_bound": shift.quadrature_bound,
        },
        "osc_sandwich": { "lower_slack": sandwich.lower_slack, "upper_slack": sandwich.upper_slack },
    }))
}

fn translated_settings(cfg: &ExperimentConfig) -> TranslatedSettings {
    let o = &cfg.translated;
    TranslatedSettings {
        eta_window: o.eta_window,
        n_seeds: o.n_seeds,
        eta_seeds: o.eta_seeds,
        tol: cfg.tolerances.accept,
        max_iters: o.max_iters,
        seed: cfg.seed,
        flow_tol: Some(cfg.tolerances.flow.min(cfg.tolerances.accept * 1e-3)),
        ..Default::default()
    }
}

fn run_translated(
    cfg: &ExperimentConfig,
    m: &ManifoldModel,
    h: &HamRef,
    out: &mut Artifacts,
) -> Result<Value, CliError> {
    let s = translated_settings(cfg);
    let search = find_translated_points(m, h, &s)?;
    let oracle = match cfg.translated.oracle_grid {
        Some(per_dim) => {
            let map = FlowMap::new(m.clone(), h.clone(), s.flow_tol());
            let o = grid_oracle(
                &map,
                &search,
                per_dim,
                cfg.translated.oracle_eta_nodes,
                s.flow_tol(),
            )?;
            if !o.complete() {
                out.failures.push(format!(
                    "grid oracle found {} unmatched candidates",
                    o.unmatched.len()
                ));
            }
            Some(o)
        }
        None => None,
    };
    let certificate = match m.rho() {
        Some(_) => {
            let c = small_oscillation_certificate(m, h, &cfg.energy, &search)?;
            if c.status == CertificateStatus::ViolationSuspect {
                out.failures.push(format!(
                    "small-oscillation certificate: found {} points, expected at least {}",
                    c.found_points, c.expected_min_points
                ));
            }
            Some(c)
        }
        None => None,
    };
    out.tables
        .insert("translated_points".into(), search.to_csv());
    out.tables.insert(
        "families".into(),
        csv(
            &[
                "eta_mod",
                "members",
                "kernel_dim",
                "whole_manifold",
                "spread",
            ],
            search.families.iter().map(|f| {
                vec![
                    num(f.eta_mod),
                    f.members.to_string(),
                    f.kernel_dim.to_string(),
                    f.whole_manifold.to_string(),
                    num(f.spread),
                ]
            }),
        ),
    );
    let residuals: Vec<f64> = search
        .records
        .iter()
        .map(|r| r.residual_pos.max(r.residual_conf))
        .collect();
    out.plotdata.insert(
        "residual_histogram".into(),
        log_histogram(&residuals, -16, -6),
    );
    Ok(json!({
        "whole_manifold_family": search.has_whole_manifold_family(),
        "distinct_roots": search.distinct_roots,
        "search": search,
        "oracle": oracle,
        "certificate": certificate,
    }))
}

fn run_capacity(
    cfg: &ExperimentConfig,
    m: &ManifoldModel,
    h: &HamRef,
    out: &mut Artifacts,
) -> Result<Value, CliError> {
    let opts = cfg
        .capacity
        .as_ref()
        .ok_or_else(|| CliError::schema("capacity", "missing"))?;
    let b = &opts.box_set;
    let map = FlowMap::new(m.clone(), h.clone(), cfg.tolerances.flow);
    let disp = displacement_check_map(&map, b, opts.samples, opts.margin, cfg.seed)?;
    let audit = if disp.verdict == Displacement::Displaced {
        let a = energy_capacity_audit(m, h, b, &disp, &cfg.energy)?;
        if a.slack < -cfg.tolerances.audit {
            out.failures.push(format!(
                "energy-capacity audit violated: energy_ub {} < quarter_hat_c_lb {}",
                a.energy_ub, a.quarter_hat_c_lb
            ));
        }
        Some(a)
    } else {
        None
    };
    let base = hat_c(b).ok();
    let mut rows = Vec::new();
    let mut scales = vec![1.0];
    scales.extend(&opts.scales);
    for lambda in scales {
        let sb = b.scaled(lambda);
        let c = hat_c(&sb).ok();
        if c != base {
            out.failures.push(format!(
                "hat_c not scale invariant at {lambda}: {c:?} vs {base:?}"
            ));
        }
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        rows.push(vec![
            num(lambda),
            num(height(&sb)),
            opt(gromov_lower_bound(&sb).ok()),
            opt(c),
            opt(volume_cap(m, &sb)),
        ]);
    }
    out.tables.insert(
        "capacity_scales".into(),
        csv(
            &["scale", "height", "gromov_lb", "hat_c", "volume_cap"],
            rows,
        ),
    );
    Ok(json!({
        "box": b,
        "shape": b.shape_name(),
        "height": height(b),
        "gromov_lb": gromov_lower_bound(b).ok(),
        "hat_c": base,
        "displacement": disp,
        "audit": audit,
    }))
}

fn run_axioms(
    cfg: &ExperimentConfig,
    m: &ManifoldModel,
    out: &mut Artifacts,
) -> Result<Value, CliError> {
    let o = &cfg.axioms;
    let s = EnergySettings {
        grid_per_dim: o.grid_per_dim,
        time_nodes: o.time_nodes,
        ..cfg.energy
    };
    s.validate()
        .map_err(|e| CliError::schema("axioms", e.to_string()))?;
    let spec = RandomSpec {
        amplitude: o.amplitude,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let hams: Vec<HamRef> = (0..o.hamiltonians)
        .map(|_| table(random_table(m, &spec, &mut rng)))
        .collect();
    let s_tri = s.with_time_nodes(o.triangle_time_nodes.max(s.time_nodes));
    let linf_tri: Vec<f64> = hams
        .iter()
        .map(|h| Ok(time_profile(m, &**h, &s_tri)?.linf()))
        .collect::<Result<_, CliError>>()?;

    let mut rows = Vec::new();
    let mut worst = json!({});
    let (mut sym_max, mut tri_min, mut shift_ratio_max, mut nat_max) =
        (0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    let s_nat = s.with_time_nodes(o.naturality_time_nodes);
    let flow_tol = cfg.tolerances.flow;
    for (i, h) in hams.iter().enumerate() {
        let (shift, p) = reeb_shift_optimum(m, h, &s)?;
        let inv = time_profile(m, &*invert(h.clone()), &s)?;
        let symmetry = (p.linf() - inv.linf()).abs();
        let j = (i + 1) % hams.len();
        let cat = concat(h.clone(), hams[j].clone(), ReparamPair::default())?;
        let triangle = linf_tri[i] + linf_tri[j] - time_profile(m, &*cat, &s_tri)?.linf();
        let shift_residual = (shift.shifted_energy - shift.half_osc).abs();
        let shift_allowed = 5.0 * shift.quadrature_bound.max(1e-12);
        let sandwich = osc_sandwich(&p);
        let naturality = if i < o.naturality_cases {
            let psi_h = table(random_table(
                m,
                &RandomSpec {
                    amplitude: 0.15,
                    ..spec
                },
                &mut rng,
            ));
            let psi: Arc<dyn ContactMap> = Arc::new(FlowMap::new(m.clone(), psi_h, flow_tol));
            let lhs = time_profile(m, &*conjugate(h.clone(), psi.clone()), &s_nat)?.linf();
            let rhs = time_profile(m, &ConformallyWeighted::new(h.clone(), psi), &s_nat)?.linf();
            Some((lhs - rhs).abs())
        } else {
            None
        };

        if symmetry >= SYMMETRY_TOL {
            out.failures
                .push(format!("H{i}: symmetry residual {symmetry:e}"));
        }
        if triangle < -TRIANGLE_TOL {
            out.failures
                .push(format!("H{i}·H{j}: triangle slack {triangle:e}"));
        }
        if shift_residual >= shift_allowed {
            out.failures.push(format!(
                "H{i}: Reeb shift residual {shift_residual:e} >= {shift_allowed:e}"
            ));
        }
        if sandwich.lower_slack < -1e-12 || sandwich.upper_slack < -1e-12 {
            out.failures
                .push(format!("H{i}: pathwise sandwich violated"));
        }
        if let Some(n) = naturality {
            if n >= NATURALITY_TOL {
                out.failures
                    .push(format!("H{i}: naturality residual {n:e}"));
            }
            nat_max = nat_max.max(n);
        }
        sym_max = sym_max.max(symmetry);
        tri_min = tri_min.min(triangle);
        shift_ratio_max = shift_ratio_max.max(shift_residual / shift_allowed);
        rows.push(vec![
            i.to_string(),
            num(p.linf()),
            num(p.osc()),
            num(symmetry),
            num(triangle),
            num(shift_residual),
            num(shift.quadrature_bound),
            num(sandwich.lower_slack),
            num(sandwich.upper_slack),
            naturality.map(num).unwrap_or_default(),
        ]);
    }
    worst["symmetry_residual_max"] = json!(sym_max);
    worst["triangle_slack_min"] = json!(tri_min);
    worst["reeb_shift_residual_over_allowed_max"] = json!(shift_ratio_max);
    worst["naturality_residual_max"] = json!(nat_max);
    out.tables.insert(
        "axioms".into(),
        csv(
            &[
                "index",
                "linf",
                "osc",
                "symmetry_residual",
                "triangle_slack",
                "reeb_shift_residual",
                "reeb_shift_bound",
                "osc_sandwich_lower_slack",
                "osc_sandwich_upper_slack",
                "naturality_residual",
            ],
            rows,
        ),
    );
    Ok(json!({
        "hamiltonians": o.hamiltonians,
        "naturality_cases": o.naturality_cases.min(o.hamiltonians),
        "energy_settings": s,
        "summary": worst,
        "thresholds": {
            "symmetry": SYMMETRY_TOL,
            "triangle": -TRIANGLE_TOL,
            "naturality": NATURALITY_TOL,
            "reeb_shift": "5 x quadrature bound",
        },
    }))
}
