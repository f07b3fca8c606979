//! Translated points: solutions of `ψ(x) = φ_R^η(x)` with `g_ψ(x) = 0`,
//! their non-degeneracy, and the small-oscillation count certificate.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::energy::{time_profile, EnergySettings};
use crate::error::{ContactError, Result};
use crate::flow::{reeb_differential, reeb_flow_tol, ContactMap, FlowMap};
use crate::geometry::{ManifoldModel, Point};
use crate::hamiltonian::HamRef;
use crate::linalg::{condition_number, least_squares, numerical_kernel, spectral_norm};

/// Monodromy condition number above which no verdict is issued.
pub const WITHHOLD_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    NonDegenerate,
    Degenerate,
    Withheld,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::NonDegenerate => "nondegenerate",
            Verdict::Degenerate => "degenerate",
            Verdict::Withheld => "withheld",
        }
    }
}

/// An algebraic translated point `(x, η)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslatedRecord {
    pub x: Vec<f64>,
    pub eta: f64,
    pub residual_pos: f64,
    pub residual_conf: f64,
    pub nondegenerate: bool,
    pub kernel_dim: usize,
    pub monodromy_cond: f64,
    pub newton_iters: usize,
    pub verdict: Verdict,
}

impl TranslatedRecord {
    pub fn point(&self) -> Point {
        Point::from_column_slice(&self.x)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslatedSettings {
    /// Search interval for `η`; `None` selects [`default_eta_window`].
    pub eta_window: Option<(f64, f64)>,
    /// Spatial seeds; each is paired with every `η` seed.
    pub n_seeds: usize,
    pub eta_seeds: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Integrator tolerance; `None` means `tol · 1e-3`.
    pub flow_tol: Option<f64>,
    pub fd_step: f64,
    /// Members of a degenerate family kept in the record list.
    pub max_family_records: usize,
}

impl Default for TranslatedSettings {
    fn default() -> Self {
        Self {
            eta_window: None,
            n_seeds: 32,
            eta_seeds: 16,
            tol: 1e-8,
            max_iters: 50,
            seed: 0,
            flow_tol: None,
            fd_step: 1e-6,
            max_family_records: 8,
        }
    }
}

impl TranslatedSettings {
    pub fn flow_tol(&self) -> f64 {
        self.flow_tol.unwrap_or((self.tol * 1e-3).max(1e-13))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_seeds == 0 || self.eta_seeds == 0 {
            return Err(ContactError::Config(
                "n_seeds and eta_seeds must be ≥ 1".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(ContactError::Config("tol must be positive".into()));
        }
        if let Some((lo, hi)) = self.eta_window {
            if !(lo < hi) {
                return Err(ContactError::Config(format!(
                    "eta_window ({lo}, {hi}) is empty"
                )));
            }
        }
        Ok(())
    }
}

/// A positive-dimensional set of degenerate translated points sharing `η` modulo
/// the Reeb period.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslatedFamily {
    pub eta_mod: f64,
    pub eta_values: Vec<f64>,
    pub members: usize,
    pub kernel_dim: usize,
    pub whole_manifold: bool,
    /// Largest distance between two members.
    pub spread: f64,
    pub representative: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedDiagnostic {
    pub seed_index: usize,
    pub x: Vec<f64>,
    pub eta: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslatedSearch {
    pub manifold: String,
    pub eta_window: (f64, f64),
    pub tol: f64,
    pub seeds_tried: usize,
    pub seeds_converged: usize,
    pub skipped: Vec<SeedDiagnostic>,
    /// Isolated records plus down-sampled family members.
    pub records: Vec<TranslatedRecord>,
    pub families: Vec<TranslatedFamily>,
    /// Distinct accepted roots before down-sampling.
    pub distinct_roots: usize,
}

impl TranslatedSearch {
    pub fn has_whole_manifold_family(&self) -> bool {
        self.families.iter().any(|f| f.whole_manifold)
    }

    pub fn isolated(&self) -> impl Iterator<Item = &TranslatedRecord> {
        self.records
            .iter()
            .filter(|r| r.kernel_dim == 0 || r.verdict == Verdict::Withheld)
    }

    pub fn to_csv(&self) -> String {
        records_csv(&self.records)
    }
}

pub fn records_csv(records: &[TranslatedRecord]) -> String {
    let mut s = String::new();
    let n = records.first().map_or(0, |r| r.x.len());
    for i in 0..n {
        let _ = write!(s, "x{i},");
    }
    s.push_str("eta,residual_pos,residual_conf,kernel_dim,monodromy_cond,newton_iters,verdict\n");
    for r in records {
        for v in &r.x {
            let _ = write!(s, "{v:.12e},");
        }
        let _ = writeln!(
            s,
            "{:.12e},{:.3e},{:.3e},{},{:.6e},{},{}",
            r.eta,
            r.residual_pos,
            r.residual_conf,
            r.kernel_dim,
            r.monodromy_cond,
            r.newton_iters,
            r.verdict.as_str()
        );
    }
    s
}

/// `[−2ρ, 2ρ]` when the Reeb period is known; otherwise a window scaled by the
/// path energy and the spread of the conformal factor.
pub fn default_eta_window(
    m: &ManifoldModel,
    h: &HamRef,
    energy: &EnergySettings,
    flow_tol: f64,
) -> Result<(f64, f64)> {
    if let Some(rho) = m.rho() {
        return Ok((-2.0 * rho.value, 2.0 * rho.value));
    }
    let e = time_profile(m, &**h, energy)?.linf();
    let map = FlowMap::new(m.clone(), h.clone(), flow_tol);
    let grid = m.spatial_grid(4);
    let mut gmax = 0.0f64;
    for p in &grid.points {
        gmax = gmax.max(map.apply(p)?.1.abs());
    }
    let w = (2.0 * e * gmax.exp()).max(1e-3);
    Ok((-w, w))
}

/// Unit-cube periodicity flags of [`ManifoldModel::param_point`].
fn param_periodic(m: &ManifoldModel) -> Vec<bool> {
    if m.is_constrained() {
        vec![false, true, true]
    } else {
        m.chart().iter().map(|c| c.periodic).collect()
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0 / base as f64;
    let mut v = 0.0;
    while i > 0 {
        v += f * (i % base) as f64;
        i /= base;
        f /= base as f64;
    }
    v
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Halton points in `[0,1]^d` with a seeded Cranley–Patterson shift.
pub fn halton_lattice(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
    (0..n)
        .map(|i| {
            (0..d)
                .map(|k| {
                    (radical_inverse(i as u64 + 1, PRIMES[k % PRIMES.len()]) + shift[k]).fract()
                })
                .collect()
        })
        .collect()
}

struct Residual<'a> {
    m: &'a ManifoldModel,
    map: &'a dyn ContactMap,
    flow_tol: f64,
}

impl Residual<'_> {
    fn psi(&self, x: &Point) -> Result<(Point, f64)> {
        self.map.apply(x)
    }

    fn residual_at_image(&self, x: &Point, y: &Point, g: f64, eta: f64) -> Result<DVector<f64>> {
        let z = reeb_flow_tol(self.m, -eta, y, self.flow_tol)?;
        let d = self.m.dim();
        let mut f = DVector::zeros(d + 1);
        f.rows_mut(0, d).copy_from(&self.m.log(x, &z));
        f[d] = g;
        Ok(f)
    }

    fn eval(&self, x: &Point, eta: f64) -> Result<DVector<f64>> {
        let (y, g) = self.psi(x)?;
        self.residual_at_image(x, &y, g, eta)
    }

    fn jacobian(&self, x: &Point, y: &Point, g: f64, eta: f64, h: f64) -> Result<DMatrix<f64>> {
        let d = self.m.dim();
        let mut j = DMatrix::zeros(d + 1, d + 1);
        for k in 0..d {
            let mut e = DVector::zeros(d);
            e[k] = h;
            let fp = self.eval(&self.m.retract(x, &e), eta)?;
            let fm = self.eval(&self.m.retract(x, &(-e)), eta)?;
            j.set_column(k, &((fp - fm) / (2.0 * h)));
        }
        let fp = self.residual_at_image(x, y, g, eta + h)?;
        let fm = self.residual_at_image(x, y, g, eta - h)?;
        j.set_column(d, &((fp - fm) / (2.0 * h)));
        Ok(j)
    }

    /// Direct residuals `(dist(ψx, φ^η x), |g_ψ(x)|)`.
    fn direct(&self, x: &Point, eta: f64) -> Result<(f64, f64)> {
        let (y, g) = self.psi(x)?;
        let z = reeb_flow_tol(self.m, eta, x, self.flow_tol)?;
        Ok((self.m.distance(&y, &z), g.abs()))
    }
}

enum SeedOutcome {
    Converged {
        x: Point,
        eta: f64,
        pos: f64,
        conf: f64,
        iters: usize,
    },
    NoConvergence,
    Skipped(String),
}

fn newton(res: &Residual, x0: Point, eta0: f64, s: &TranslatedSettings) -> SeedOutcome {
    let m = res.m;
    let d = m.dim();
    let mut x = x0;
    let mut eta = eta0;
    let mut run = || -> Result<SeedOutcome> {
        let (mut y, mut g) = res.psi(&x)?;
        let mut f = res.residual_at_image(&x, &y, g, eta)?;
        for it in 0..=s.max_iters {
            let (pos, conf) = res.direct(&x, eta)?;
            if pos < 0.01 * s.tol && conf < 0.01 * s.tol {
                return Ok(SeedOutcome::Converged {
                    x: x.clone(),
                    eta,
                    pos,
                    conf,
                    iters: it,
                });
            }
            if it == s.max_iters {
                break;
            }
            let j = res.jacobian(&x, &y, g, eta, s.fd_step)?;
            let step = match least_squares(&j, &(-&f), 1e-10) {
                Some(v) if v.iter().all(|c| c.is_finite()) => v,
                _ if it == 0 => {
                    return Ok(SeedOutcome::Skipped("singular Jacobian at seed".into()))
                }
                _ => break,
            };
            let fnorm = f.norm();
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let v = step.rows(0, d) * alpha;
                let xn = m.wrap(&m.retract(&x, &v.into_owned()));
                let en = eta + alpha * step[d];
                if let Ok((yn, gn)) = res.psi(&xn) {
                    if let Ok(fnew) = res.residual_at_image(&xn, &yn, gn, en) {
                        if fnew.norm() <= (1.0 - 1e-4 * alpha) * fnorm {
                            x = xn;
                            eta = en;
                            y = yn;
                            g = gn;
                            f = fnew;
                            accepted = true;
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let (pos, conf) = res.direct(&x, eta)?;
        if pos < s.tol && conf < s.tol {
            Ok(SeedOutcome::Converged {
                x: x.clone(),
                eta,
                pos,
                conf,
                iters: s.max_iters,
            })
        } else {
            Ok(SeedOutcome::NoConvergence)
        }
    };
    match run() {
        Ok(o) => o,
        Err(e) => SeedOutcome::Skipped(e.to_string()),
    }
}

/// Multi-start damped Gauss–Newton search for algebraic translated points of
/// `ψ`, followed by non-degeneracy classification and family detection.
pub fn find_translated_points_map(
    map: &dyn ContactMap,
    window: (f64, f64),
    s: &TranslatedSettings,
) -> Result<TranslatedSearch> {
    s.validate()?;
    let m = map.model();
    let d = m.dim();
    let res = Residual {
        m,
        map,
        flow_tol: s.flow_tol(),
    };
    let lattice = halton_lattice(s.n_seeds, d, s.seed);
    let (lo, hi) = window;
    let etas: Vec<f64> = (0..s.eta_seeds)
        .map(|k| lo + (k as f64 + 0.5) / s.eta_seeds as f64 * (hi - lo))
        .collect();
    let seeds: Vec<(usize, Point, f64)> = lattice
        .iter()
        .flat_map(|u| etas.iter().map(move |e| (u, *e)))
        .enumerate()
        .map(|(i, (u, e))| (i, m.param_point(u), e))
        .collect();

    let outcomes: Vec<(usize, Point, f64, SeedOutcome)> = seeds
        .into_par_iter()
        .map(|(i, x, e)| {
            let o = newton(&res, x.clone(), e, s);
            (i, x, e, o)
        })
        .collect();

    let mut skipped = Vec::new();
    let mut roots = Vec::new();
    for (i, x0, e0, o) in outcomes {
        match o {
            SeedOutcome::Converged {
                x,
                eta,
                pos,
                conf,
                iters,
            } => {
                if eta >= lo - 10.0 * s.tol && eta <= hi + 10.0 * s.tol {
                    roots.push((x, eta, pos, conf, iters));
                }
            }
            SeedOutcome::NoConvergence => {}
            SeedOutcome::Skipped(reason) => skipped.push(SeedDiagnostic {
                seed_index: i,
                x: x0.as_slice().to_vec(),
                eta: e0,
                reason,
            }),
        }
    }
    let seeds_converged = roots.len();

    roots.sort_by(|a, b| {
        a.1.total_cmp(&b.1).then_with(|| {
            a.0.iter()
                .zip(b.0.iter())
                .fold(std::cmp::Ordering::Equal, |o, (p, q)| {
                    o.then(p.total_cmp(q))
                })
        })
    });
    let merge = 10.0 * s.tol;
    let mut unique: Vec<(Point, f64, f64, f64, usize)> = Vec::new();
    for r in roots {
        let dup = unique
            .iter()
            .rev()
            .take_while(|u| r.1 - u.1 < merge)
            .any(|u| m.distance(&u.0, &r.0) < merge);
        if !dup {
            unique.push(r);
        }
    }
    let distinct_roots = unique.len();

    let records: Vec<TranslatedRecord> = unique
        .into_par_iter()
        .map(|(x, eta, pos, conf, iters)| {
            let mut rec = TranslatedRecord {
                x: x.as_slice().to_vec(),
                eta,
                residual_pos: pos,
                residual_conf: conf,
                nondegenerate: false,
                kernel_dim: 0,
                monodromy_cond: f64::NAN,
                newton_iters: iters,
                verdict: Verdict::Withheld,
            };
            match check_nondegeneracy(map, &rec, s.flow_tol()) {
                Ok(r) => r,
                Err(_) => {
                    rec.monodromy_cond = f64::INFINITY;
                    rec
                }
            }
        })
        .collect();

    let (records, families) = detect_families(m, records, s);
    Ok(TranslatedSearch {
        manifold: m.name().to_string(),
        eta_window: window,
        tol: s.tol,
        seeds_tried: s.n_seeds * s.eta_seeds,
        seeds_converged,
        skipped,
        records,
        families,
        distinct_roots,
    })
}

/// Translated points of the time-1 map of `H`.
pub fn find_translated_points(
    m: &ManifoldModel,
    h: &HamRef,
    s: &TranslatedSettings,
) -> Result<TranslatedSearch> {
    let window = match s.eta_window {
        Some(w) => w,
        None => default_eta_window(
            m,
            h,
            &EnergySettings::default().with_grid(16).with_time_nodes(33),
            s.flow_tol(),
        )?,
    };
    let map = FlowMap::new(m.clone(), h.clone(), s.flow_tol());
    find_translated_points_map(&map, window, s)
}

fn eta_key(m: &ManifoldModel, eta: f64) -> f64 {
    match m.rho() {
        Some(r) => eta.rem_euclid(r.value),
        None => eta,
    }
}

fn eta_gap(m: &ManifoldModel, a: f64, b: f64) -> f64 {
    match m.rho() {
        Some(r) => {
            let d = (a - b).rem_euclid(r.value);
            d.min(r.value - d)
        }
        None => (a - b).abs(),
    }
}

fn detect_families(
    m: &ManifoldModel,
    records: Vec<TranslatedRecord>,
    s: &TranslatedSettings,
) -> (Vec<TranslatedRecord>, Vec<TranslatedFamily>) {
    let key_tol = (100.0 * s.tol).max(1e-7);
    let mut kept = Vec::new();
    let mut groups: Vec<Vec<TranslatedRecord>> = Vec::new();
    for r in records {
        if r.kernel_dim == 0 || r.verdict == Verdict::Withheld {
            kept.push(r);
            continue;
        }
        match groups
            .iter_mut()
            .find(|g| eta_gap(m, g[0].eta, r.eta) < key_tol)
        {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    let mut families = Vec::new();
    for g in groups {
        let pts: Vec<Point> = g.iter().map(|r| r.point()).collect();
        let mut spread = 0.0f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                spread = spread.max(m.distance(&pts[i], &pts[j]));
            }
        }
        let kernel_dim = g.iter().map(|r| r.kernel_dim).max().unwrap_or(0);
        let mut eta_values: Vec<f64> = Vec::new();
        for r in &g {
            if !eta_values.iter().any(|e| (e - r.eta).abs() < key_tol) {
                eta_values.push(r.eta);
            }
        }
        families.push(TranslatedFamily {
            eta_mod: eta_key(m, g[0].eta),
            eta_values,
            members: g.len(),
            kernel_dim,
            whole_manifold: kernel_dim == m.dim(),
            spread,
            representative: g[0].x.clone(),
        });
        // Evenly spaced members, in the deterministic merge order.
        let stride = g.len().div_ceil(s.max_family_records.max(1));
        kept.extend(g.into_iter().step_by(stride.max(1)));
    }
    kept.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    families.sort_by(|a, b| a.eta_mod.total_cmp(&b.eta_mod));
    (kept, families)
}

/// Classifies `record` via `A = D(φ_R^{−η}ψ)(x)` and `dλ(x)`.
pub fn check_nondegeneracy(
    map: &dyn ContactMap,
    record: &TranslatedRecord,
    flow_tol: f64,
) -> Result<TranslatedRecord> {
    let m = map.model();
    let x = record.point();
    let dpsi = map.differential(&x)?;
    let dreeb = reeb_differential(m, -record.eta, &dpsi.point, flow_tol)?;
    let a = &dreeb.jacobian * &dpsi.jacobian;
    let dlambda = dpsi.dg * dpsi.g.exp();
    let mut out = record.clone();
    let (kernel_dim, cond) = classify(&a, &dlambda);
    out.monodromy_cond = cond;
    out.kernel_dim = kernel_dim;
    if !cond.is_finite() || cond > WITHHOLD_CONDITION {
        out.verdict = Verdict::Withheld;
        out.nondegenerate = false;
    } else {
        out.nondegenerate = kernel_dim == 0;
        out.verdict = if out.nondegenerate {
            Verdict::NonDegenerate
        } else {
            Verdict::Degenerate
        };
    }
    Ok(out)
}

/// `dim(ker(A − 1) ∩ ker dλ)` and `cond(A)`.
pub fn classify(a: &DMatrix<f64>, dlambda: &DVector<f64>) -> (usize, f64) {
    let d = a.nrows();
    let norm = spectral_norm(a);
    let k1 = numerical_kernel(&(a - DMatrix::identity(d, d)), 1e-6 * norm);
    let dim = if dlambda.norm() < 1e-8 || k1.ncols() == 0 {
        k1.ncols()
    } else {
        let w = k1.transpose() * dlambda;
        if w.norm() > 1e-6 * dlambda.norm() {
            k1.ncols() - 1
        } else {
            k1.ncols()
        }
    };
    (dim, condition_number(a))
}

/// Re-evaluates both residuals with a fresh map.
pub fn reverify(
    map: &dyn ContactMap,
    record: &TranslatedRecord,
    flow_tol: f64,
) -> Result<(f64, f64)> {
    let m = map.model();
    let x = record.point();
    let (y, g) = map.apply(&x)?;
    let z = reeb_flow_tol(m, record.eta, &x, flow_tol)?;
    Ok((m.distance(&y, &z), g.abs()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleHit {
    pub x: Vec<f64>,
    pub eta: f64,
    pub residual: f64,
    /// Root reached by polishing from `(x, eta)`.
    pub root_x: Vec<f64>,
    pub root_eta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub grid_per_dim: usize,
    pub eta_nodes: usize,
    pub threshold: f64,
    pub hits: usize,
    /// Grid minima whose Gauss–Newton polish did not reach a root.
    pub spurious: usize,
    pub unmatched: Vec<OracleHit>,
}

impl OracleReport {
    pub fn complete(&self) -> bool {
        self.unmatched.is_empty()
    }
}

/// Brute-force scan of `‖F(x, η)‖` over a parameter grid times an `η` grid.
/// Discrete local minima below the threshold are compared with `search`;
/// those that match nothing are polished with Gauss–Newton and reported as
/// unmatched only if the polish converges to a root the search missed.
pub fn grid_oracle(
    map: &dyn ContactMap,
    search: &TranslatedSearch,
    per_dim: usize,
    eta_nodes: usize,
    flow_tol: f64,
) -> Result<OracleReport> {
    let m = map.model();
    let d = m.dim();
    let per_dim = per_dim.max(2);
    let eta_nodes = eta_nodes.max(2);
    let periodic = param_periodic(m);
    let (lo, hi) = search.eta_window;
    let deta = (hi - lo) / (eta_nodes - 1) as f64;
    let etas: Vec<f64> = (0..eta_nodes).map(|k| lo + k as f64 * deta).collect();
    let coord = |idx: &[usize]| -> Vec<f64> {
        idx.iter()
            .zip(&periodic)
            .map(|(&i, &p)| {
                if p {
                    i as f64 / per_dim as f64
                } else {
                    i as f64 / (per_dim - 1) as f64
                }
            })
            .collect()
    };
    let unflatten = |mut k: usize| -> Vec<usize> {
        let mut idx = vec![0; d];
        for slot in idx.iter_mut() {
            *slot = k % per_dim;
            k /= per_dim;
        }
        idx
    };
    let total = per_dim.pow(d as u32);
    // Largest ambient spacing between grid neighbours.
    let mut dx = 0.0f64;
    for k in 0..total.min(4096) {
        let idx = unflatten(k);
        let x = m.param_point(&coord(&idx));
        for j in 0..d {
            let mut n = idx.clone();
            n[j] = (n[j] + 1) % per_dim;
            if !periodic[j] && n[j] == 0 {
                continue;
            }
            dx = dx.max(m.distance(&x, &m.param_point(&coord(&n))));
        }
    }
    let threshold = 2.0 * (dx + deta);

    let per_point: Vec<(f64, Vec<(f64, f64)>)> = (0..total)
        .into_par_iter()
        .map(|k| -> Result<(f64, Vec<(f64, f64)>)> {
            let x = m.param_point(&coord(&unflatten(k)));
            let (y, g) = map.apply(&x)?;
            let mut vals = Vec::with_capacity(eta_nodes);
            for &e in &etas {
                let z = reeb_flow_tol(m, e, &x, flow_tol)?;
                vals.push(m.distance(&y, &z) + g.abs());
            }
            let resid = |e: f64| -> Result<f64> {
                let z = reeb_flow_tol(m, e, &x, flow_tol)?;
                Ok(m.distance(&y, &z) + g.abs())
            };
            let mut mins: Vec<(f64, f64)> = Vec::new();
            for i in 0..eta_nodes {
                let is_min = (i == 0 || vals[i] <= vals[i - 1])
                    && (i + 1 == eta_nodes || vals[i] <= vals[i + 1]);
                if is_min && vals[i] < threshold {
                    mins.push(golden_min(
                        &resid,
                        (etas[i] - deta).max(lo),
                        (etas[i] + deta).min(hi),
                    )?);
                }
            }
            let best = mins
                .iter()
                .map(|p| p.1)
                .chain(vals.iter().cloned())
                .fold(f64::INFINITY, f64::min);
            Ok((best, mins))
        })
        .collect::<Result<_>>()?;

    let x_tol = 2.0 * dx * (d as f64).sqrt() + 10.0 * search.tol;
    let e_tol = deta + 10.0 * search.tol;
    let known = |x: &Point, eta: f64, xt: f64, et: f64| {
        search
            .families
            .iter()
            .any(|f| f.eta_values.iter().any(|e| eta_gap(m, *e, eta) < et))
            || search
                .records
                .iter()
                .any(|rec| (rec.eta - eta).abs() < et && m.distance(&rec.point(), x) < xt)
    };
    let mut hits = 0;
    let mut candidates = Vec::new();
    for k in 0..total {
        let idx = unflatten(k);
        let (best, mins) = &per_point[k];
        if mins.is_empty() {
            continue;
        }
        let local_min = (0..d).all(|j| {
            [1isize, -1].iter().all(|&dir| {
                let raw = idx[j] as isize + dir;
                let pos = if periodic[j] {
                    raw.rem_euclid(per_dim as isize) as usize
                } else if raw < 0 || raw >= per_dim as isize {
                    return true;
                } else {
                    raw as usize
                };
                let mut n = idx.clone();
                n[j] = pos;
                let nk = n.iter().rev().fold(0, |acc, &i| acc * per_dim + i);
                *best <= per_point[nk].0
            })
        });
        if !local_min {
            continue;
        }
        let x = m.param_point(&coord(&idx));
        for &(eta, r) in mins {
            hits += 1;
            if !known(&x, eta, x_tol, e_tol) {
                candidates.push((x.clone(), eta, r));
            }
        }
    }

    let res = Residual { m, map, flow_tol };
    let polish = TranslatedSettings {
        tol: search.tol,
        flow_tol: Some(flow_tol),
        ..TranslatedSettings::default()
    };
    let root_tol = (10.0 * search.tol).max(1e-5);
    // `None` marks a spurious minimum, `Some(None)` a root the search already has.
    let polished: Vec<Option<Option<OracleHit>>> = candidates
        .into_par_iter()
        .map(|(x, eta, r)| match newton(&res, x.clone(), eta, &polish) {
            SeedOutcome::Converged { x: xr, eta: er, .. } => {
                let (lo, hi) = search.eta_window;
                let inside = er >= lo - e_tol && er <= hi + e_tol;
                Some(
                    (inside && !known(&xr, er, root_tol, root_tol)).then(|| OracleHit {
                        x: x.as_slice().to_vec(),
                        eta,
                        residual: r,
                        root_x: xr.as_slice().to_vec(),
                        root_eta: er,
                    }),
                )
            }
            _ => None,
        })
        .collect();
    let spurious = polished.iter().filter(|p| p.is_none()).count();
    let unmatched: Vec<OracleHit> = polished.into_iter().flatten().flatten().collect();
    Ok(OracleReport {
        grid_per_dim: per_dim,
        eta_nodes,
        threshold,
        hits,
        spurious,
        unmatched,
    })
}

/// Golden-section minimum of a unimodal function on `[a, b]`.
fn golden_min<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..40 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CertificateStatus {
    Satisfied,
    ViolationSuspect,
    /// `½ osc ≥ ρ`: the count bound does not apply.
    NotApplicable,
    /// `ρ(α)` unknown.
    Unavailable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmallOscillationCertificate {
    pub half_osc: f64,
    /// `½ osc` plus the quadrature error bound.
    pub half_osc_upper: f64,
    pub rho: Option<f64>,
    pub certified: bool,
    pub betti_z2: Option<usize>,
    pub expected_min_points: usize,
    pub found_points: usize,
    pub family_present: bool,
    pub all_nondegenerate: bool,
    pub status: CertificateStatus,
    pub note: String,
}

/// Compares the search output with the lower bound on the number of
/// translated points that applies below the Reeb period.
pub fn small_oscillation_certificate(
    m: &ManifoldModel,
    h: &HamRef,
    energy: &EnergySettings,
    search: &TranslatedSearch,
) -> Result<SmallOscillationCertificate> {
    let profile = time_profile(m, &**h, energy)?;
    let half_osc = 0.5 * profile.osc();
    let half_osc_upper = 0.5 * (profile.osc() + profile.quadrature_bound(|n| n.osc(), 2.0));
    let rho = m.rho().map(|r| r.value);
    let betti = m.betti_z2_total();
    let point_tol = (10.0 * search.tol).max(1e-6);
    let mut distinct: Vec<Point> = Vec::new();
    for r in &search.records {
        let p = r.point();
        if !distinct.iter().any(|q| m.distance(q, &p) < point_tol) {
            distinct.push(p);
        }
    }
    let family_present = !search.families.is_empty();
    let all_nondegenerate =
        !search.records.is_empty() && search.records.iter().all(|r| r.nondegenerate);
    let found = distinct.len();
    let mut cert = SmallOscillationCertificate {
        half_osc,
        half_osc_upper,
        rho,
        certified: false,
        betti_z2: betti,
        expected_min_points: 0,
        found_points: found,
        family_present,
        all_nondegenerate,
        status: CertificateStatus::Unavailable,
        note: String::new(),
    };
    let Some(rho) = rho else {
        cert.note = "minimal Reeb period unknown: certificate unavailable".into();
        return Ok(cert);
    };
    if half_osc_upper >= rho {
        cert.status = CertificateStatus::NotApplicable;
        cert.note = format!("half oscillation {half_osc_upper:.6} ≥ ρ = {rho:.6}: report only");
        return Ok(cert);
    }
    cert.certified = true;
    cert.expected_min_points = match (all_nondegenerate, betti) {
        (true, Some(b)) => b,
        _ => 1,
    };
    if family_present || found >= cert.expected_min_points {
        cert.status = CertificateStatus::Satisfied;
        cert.note = "found translated points meet the lower bound".into();
    } else {
        cert.status = CertificateStatus::ViolationSuspect;
        cert.note = format!(
            "found {found} < expected {}: solver gap suspected, not a failure of the bound",
            cert.expected_min_points
        );
    }
    Ok(cert)
}

/// `φ_R^η ∘ ψ` for the η-shift covariance check.
pub fn shifted_map(map: Arc<dyn ContactMap>, eta: f64) -> crate::flow::ComposedMap {
    let model = map.model().clone();
    crate::flow::ComposedMap {
        first: map,
        second: Arc::new(crate::flow::ReebMap::new(model, eta)),
    }
}
