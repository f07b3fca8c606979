//! Path energies and the path surgeries used by the norm axioms.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use super::profile::{time_profile, EnergySettings, TimeProfile};
use crate::error::{ContactError, Result};
use crate::flow::ContactMap;
use crate::geometry::{ContactFrame, ManifoldModel, Point};
use crate::hamiltonian::{fd_gradient, HamRef, TimeHamiltonian, TimeShifted};

/// `∫₀¹ |H_t|_{L∞(N)} dt` for this path (an upper bound for the norm).
pub fn linf_energy(m: &ManifoldModel, h: &dyn TimeHamiltonian, s: &EnergySettings) -> Result<f64> {
    Ok(time_profile(m, h, s)?.linf())
}

/// `∫₀¹ (max H_t − min H_t) dt`.
pub fn osc_energy(m: &ManifoldModel, h: &dyn TimeHamiltonian, s: &EnergySettings) -> Result<f64> {
    Ok(time_profile(m, h, s)?.osc())
}

/// Optimal Reeb shift `b*(t) = ½(max H_t + min H_t)` and the energy of `H − b*`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReebShift {
    pub times: Vec<f64>,
    pub b_star: Vec<f64>,
    pub shifted_energy: f64,
    pub half_osc: f64,
    /// Combined quadrature bound of both sides of `shifted = ½ osc`.
    pub quadrature_bound: f64,
}

pub fn reeb_shift_optimum(
    m: &ManifoldModel,
    h: &HamRef,
    s: &EnergySettings,
) -> Result<(ReebShift, TimeProfile)> {
    let profile = time_profile(m, &**h, s)?;
    let b_star: Vec<f64> = profile
        .nodes
        .iter()
        .map(|n| 0.5 * (n.max + n.min))
        .collect();
    let shifted = TimeShifted {
        inner: h.clone(),
        times: profile.times(),
        shift: b_star.clone(),
    };
    let sp = time_profile(m, &shifted, s)?;
    let bound =
        profile.quadrature_bound(|n| 0.5 * n.osc(), 1.0) + sp.quadrature_bound(|n| n.maxabs, 1.0);
    Ok((
        ReebShift {
            times: profile.times(),
            b_star,
            shifted_energy: sp.linf(),
            half_osc: 0.5 * profile.osc(),
            quadrature_bound: bound,
        },
        profile,
    ))
}

/// `max{|⌈∫max H_t⌉|, |⌊∫min H_t⌋|}`.
pub fn ceiling_lower_bound(profile: &TimeProfile) -> i64 {
    let up = profile.integral_max().ceil().abs();
    let dn = profile.integral_min().floor().abs();
    up.max(dn) as i64
}

/// Calabi–Weinstein value with the strictness check that makes it meaningful.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CalabiWeinstein {
    pub value: f64,
    pub strict: bool,
    /// Largest sampled `|dH_t(R)|`.
    pub max_reeb_derivative: f64,
}

pub const STRICTNESS_TOL: f64 = 1e-6;

/// `(1/vol) ∫₀¹ ∫_N H α∧(dα)ⁿ dt` from the profile means, plus the strictness flag.
pub fn calabi_weinstein(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    profile: &TimeProfile,
) -> Result<CalabiWeinstein> {
    let value = profile.integral_mean();
    let max_reeb_derivative = if h.constant_value().is_some() {
        0.0
    } else {
        let grid = m.spatial_grid(profile.settings.grid_per_dim.min(12));
        let mut worst = 0.0f64;
        for k in 0..=8 {
            let t = k as f64 / 8.0;
            for p in &grid.points {
                let frame = ContactFrame::at(m, p)?;
                let (_, g) = h.eval_grad(t, p);
                worst = worst.max(frame.reeb_derivative(&g).abs());
            }
        }
        worst
    };
    Ok(CalabiWeinstein {
        value,
        strict: max_reeb_derivative < STRICTNESS_TOL,
        max_reeb_derivative,
    })
}

/// Per-node check of `|H|∞ ≤ osc + |mean| ≤ 3·|H|∞`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct OscSandwich {
    /// `min_t (osc + |mean| − |H|∞)`.
    pub lower_slack: f64,
    /// `min_t (3|H|∞ − osc − |mean|)`.
    pub upper_slack: f64,
}

pub fn osc_sandwich(profile: &TimeProfile) -> OscSandwich {
    let mut out = OscSandwich {
        lower_slack: f64::INFINITY,
        upper_slack: f64::INFINITY,
    };
    for n in &profile.nodes {
        let mid = n.osc() + n.mean.abs();
        out.lower_slack = out.lower_slack.min(mid - n.maxabs);
        out.upper_slack = out.upper_slack.min(3.0 * n.maxabs - mid);
    }
    out
}

/// Result of comparing energies for `α` and `α' = fα`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RescaleReport {
    pub energy_alpha: f64,
    pub energy_alpha_prime: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// `E' − min f·E` (nonnegative when the lower sandwich holds).
    pub lower_slack: f64,
    /// `max f·E − E'`.
    pub upper_slack: f64,
}

/// Energies of one vector-field path for `α` and for `fα`, whose Hamiltonian is `f·H`.
pub fn rescale_form_energy(
    m: &ManifoldModel,
    f: &HamRef,
    h: &HamRef,
    s: &EnergySettings,
) -> Result<RescaleReport> {
    if !f.is_autonomous() {
        return Err(ContactError::Config(
            "form rescaling must be time independent".into(),
        ));
    }
    let fp = time_profile(m, &**f, &s.with_time_nodes(3))?;
    let f_min = fp.nodes[0].min;
    let f_max = fp.nodes[0].max;
    if !(f_min > 0.0) {
        return Err(ContactError::Config(format!(
            "form rescaling must be positive, sampled minimum {f_min}"
        )));
    }
    let e = time_profile(m, &**h, s)?.linf();
    let prod = crate::hamiltonian::product(f.clone(), h.clone());
    let ep = time_profile(m, &*prod, s)?.linf();
    Ok(RescaleReport {
        energy_alpha: e,
        energy_alpha_prime: ep,
        f_min,
        f_max,
        lower_slack: ep - f_min * e,
        upper_slack: f_max * e - ep,
    })
}

/// Quintic smoothstep `6u⁵ − 15u⁴ + 10u³` on a window, as a reparametrization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothstep {
    pub start: f64,
    pub end: f64,
}

impl Smoothstep {
    pub fn value(&self, t: f64) -> f64 {
        let u = ((t - self.start) / (self.end - self.start)).clamp(0.0, 1.0);
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let w = self.end - self.start;
        let u = (t - self.start) / w;
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        30.0 * u * u * (1.0 - u) * (1.0 - u) / w
    }
}

/// Reparametrizations `(τ₁, τ₂)` with `supp τ₁′ ⊂ [½, 1]`, `supp τ₂′ ⊂ [0, ½]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReparamPair {
    pub tau1: Smoothstep,
    pub tau2: Smoothstep,
}

impl Default for ReparamPair {
    fn default() -> Self {
        Self {
            tau1: Smoothstep {
                start: 0.5,
                end: 1.0,
            },
            tau2: Smoothstep {
                start: 0.0,
                end: 0.5,
            },
        }
    }
}

impl ReparamPair {
    pub fn validate(&self) -> Result<()> {
        let ok = |s: &Smoothstep, lo: f64, hi: f64| s.start < s.end && s.start >= lo && s.end <= hi;
        if !ok(&self.tau1, 0.5, 1.0) {
            return Err(ContactError::Config(format!(
                "tau1 must be supported in [1/2, 1], got [{}, {}]",
                self.tau1.start, self.tau1.end
            )));
        }
        if !ok(&self.tau2, 0.0, 0.5) {
            return Err(ContactError::Config(format!(
                "tau2 must be supported in [0, 1/2], got [{}, {}]",
                self.tau2.start, self.tau2.end
            )));
        }
        Ok(())
    }
}

/// `H_t = τ₂′(t) G_{τ₂(t)}` on `[0, ½]`, `τ₁′(t) F_{τ₁(t)}` on `[½, 1]`:
/// generates `ψ^F ∘ ψ^G`.
#[derive(Debug, Clone)]
pub struct Concatenated {
    pub f: HamRef,
    pub g: HamRef,
    pub reparams: ReparamPair,
}

impl Concatenated {
    /// `(weight, time, which)` where `which` is `false` for `G`.
    fn active(&self, t: f64) -> (f64, f64, bool) {
        if t < 0.5 {
            (
                self.reparams.tau2.derivative(t),
                self.reparams.tau2.value(t),
                false,
            )
        } else {
            (
                self.reparams.tau1.derivative(t),
                self.reparams.tau1.value(t),
                true,
            )
        }
    }
}

pub fn concat(f: HamRef, g: HamRef, reparams: ReparamPair) -> Result<HamRef> {
    reparams.validate()?;
    Ok(Arc::new(Concatenated { f, g, reparams }))
}

impl TimeHamiltonian for Concatenated {
    fn eval(&self, t: f64, x: &Point) -> f64 {
        let (w, s, is_f) = self.active(t);
        if w == 0.0 {
            return 0.0;
        }
        w * if is_f {
            self.f.eval(s, x)
        } else {
            self.g.eval(s, x)
        }
    }
    fn eval_grad(&self, t: f64, x: &Point) -> (f64, DVector<f64>) {
        let (w, s, is_f) = self.active(t);
        if w == 0.0 {
            return (0.0, DVector::zeros(x.len()));
        }
        let (v, g) = if is_f {
            self.f.eval_grad(s, x)
        } else {
            self.g.eval_grad(s, x)
        };
        (w * v, g * w)
    }
    fn has_analytic_gradient(&self) -> bool {
        self.f.has_analytic_gradient() && self.g.has_analytic_gradient()
    }
    fn constant_value(&self) -> Option<f64> {
        (self.f.constant_value() == Some(0.0) && self.g.constant_value() == Some(0.0))
            .then_some(0.0)
    }
    fn basis_len(&self) -> Option<usize> {
        Some(self.g.basis_len()? + self.f.basis_len()?)
    }
    fn basis(&self, x: &Point, out: &mut [f64]) {
        let ng = self.g.basis_len().unwrap_or(0);
        self.g.basis(x, &mut out[..ng]);
        self.f.basis(x, &mut out[ng..]);
    }
    fn coefficients(&self, t: f64, out: &mut [f64]) {
        let ng = self.g.basis_len().unwrap_or(0);
        out.iter_mut().for_each(|c| *c = 0.0);
        let (w, s, is_f) = self.active(t);
        if w == 0.0 {
            return;
        }
        let part = if is_f { &mut out[ng..] } else { &mut out[..ng] };
        if is_f {
            self.f.coefficients(s, part);
        } else {
            self.g.coefficients(s, part);
        }
        part.iter_mut().for_each(|c| *c *= w);
    }
}

type LookupCache = Mutex<HashMap<Vec<u64>, (Point, f64)>>;

const CACHE_LIMIT: usize = 1 << 21;

fn cached_lookup<F>(cache: &LookupCache, x: &Point, f: F) -> Result<(Point, f64)>
where
    F: FnOnce(&Point) -> Result<(Point, f64)>,
{
    let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
    if let Some(hit) = cache.lock().expect("cache lock").get(&key) {
        return Ok(hit.clone());
    }
    let val = f(x)?;
    let mut c = cache.lock().expect("cache lock");
    if c.len() >= CACHE_LIMIT {
        c.clear();
    }
    c.insert(key, val.clone());
    Ok(val)
}

/// `G_t = (λ_ψ · H_t) ∘ ψ⁻¹`, generating `ψ φ_t ψ⁻¹`. Inverse lookups are
/// memoized per point since `ψ` does not depend on `t`.
pub struct Conjugated {
    pub inner: HamRef,
    pub map: Arc<dyn ContactMap>,
    cache: LookupCache,
}

impl Conjugated {
    pub fn new(inner: HamRef, map: Arc<dyn ContactMap>) -> Self {
        Self {
            inner,
            map,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// `(ψ⁻¹(y), λ_ψ(ψ⁻¹ y))`.
    pub fn preimage(&self, y: &Point) -> Result<(Point, f64)> {
        let (x, g_inv) = cached_lookup(&self.cache, y, |y| self.map.apply_inverse(y))
            .map_err(|e| ContactError::InverseEvaluation(e.to_string()))?;
        Ok((x, (-g_inv).exp()))
    }

    pub fn try_eval(&self, t: f64, y: &Point) -> Result<f64> {
        let (x, lambda) = self.preimage(y)?;
        Ok(lambda * self.inner.eval(t, &x))
    }
}

impl fmt::Debug for Conjugated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Conjugated({:?} by {:?})", self.inner, self.map)
    }
}

impl TimeHamiltonian for Conjugated {
    fn eval(&self, t: f64, y: &Point) -> f64 {
        self.try_eval(t, y).unwrap_or(f64::NAN)
    }
    fn eval_grad(&self, t: f64, y: &Point) -> (f64, DVector<f64>) {
        let v = self.eval(t, y);
        let m = self.map.model();
        // perturb within the model so inverse flows start on N
        let g = fd_gradient(
            |z| {
                let mut p = z.clone();
                m.project(p.as_mut_slice());
                self.eval(t, &p)
            },
            y,
        );
        (v, g)
    }
    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }
    fn constant_value(&self) -> Option<f64> {
        if self.map.is_strict() {
            self.inner.constant_value()
        } else {
            None
        }
    }
    fn basis_len(&self) -> Option<usize> {
        self.inner.basis_len()
    }
    fn basis(&self, y: &Point, out: &mut [f64]) {
        match self.preimage(y) {
            Ok((x, lambda)) => {
                self.inner.basis(&x, out);
                out.iter_mut().for_each(|b| *b *= lambda);
            }
            Err(_) => out.iter_mut().for_each(|b| *b = f64::NAN),
        }
    }
    fn coefficients(&self, t: f64, out: &mut [f64]) {
        self.inner.coefficients(t, out)
    }
}

pub fn conjugate(h: HamRef, map: Arc<dyn ContactMap>) -> Arc<Conjugated> {
    Arc::new(Conjugated::new(h, map))
}

/// `x ↦ λ_ψ(x)·H_t(x)`: the Hamiltonian of the same path measured with `ψ^*α`.
pub struct ConformallyWeighted {
    pub inner: HamRef,
    pub map: Arc<dyn ContactMap>,
    cache: LookupCache,
}

impl ConformallyWeighted {
    pub fn new(inner: HamRef, map: Arc<dyn ContactMap>) -> Self {
        Self {
            inner,
            map,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn lambda(&self, x: &Point) -> Result<f64> {
        Ok(cached_lookup(&self.cache, x, |x| self.map.apply(x))?
            .1
            .exp())
    }
}

impl fmt::Debug for ConformallyWeighted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConformallyWeighted({:?} by {:?})", self.inner, self.map)
    }
}

impl TimeHamiltonian for ConformallyWeighted {
    fn eval(&self, t: f64, x: &Point) -> f64 {
        match self.lambda(x) {
            Ok(l) => l * self.inner.eval(t, x),
            Err(_) => f64::NAN,
        }
    }
    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }
    fn basis_len(&self) -> Option<usize> {
        self.inner.basis_len()
    }
    fn basis(&self, x: &Point, out: &mut [f64]) {
        let l = self.lambda(x).unwrap_or(f64::NAN);
        self.inner.basis(x, out);
        out.iter_mut().for_each(|b| *b *= l);
    }
    fn coefficients(&self, t: f64, out: &mut [f64]) {
        self.inner.coefficients(t, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{constant, table};
    use crate::terms::{Factor, Term, TermTable};

    fn settings() -> EnergySettings {
        EnergySettings::default().with_grid(16).with_time_nodes(33)
    }

    fn sin_z() -> HamRef {
        table(TermTable::new(vec![Term::new(
            1.0,
            0,
            vec![Factor::Sin { coord: 2, k: 1 }],
        )]))
    }

    #[test]
    fn smoothstep_endpoints_and_support() {
        let p = ReparamPair::default();
        assert_eq!(p.tau1.value(0.0), 0.0);
        assert_eq!(p.tau1.value(0.5), 0.0);
        assert_eq!(p.tau1.value(1.0), 1.0);
        assert_eq!(p.tau2.value(0.5), 1.0);
        assert_eq!(p.tau1.derivative(0.25), 0.0);
        assert_eq!(p.tau2.derivative(0.75), 0.0);
        let bad = ReparamPair {
            tau1: p.tau2,
            tau2: p.tau1,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn concat_of_zero_is_zero() {
        let h = concat(constant(0.0), constant(0.0), ReparamPair::default()).unwrap();
        assert_eq!(h.constant_value(), Some(0.0));
    }

    #[test]
    fn torus_sin_energies() {
        let m = ManifoldModel::torus3();
        let p = time_profile(&m, &*sin_z(), &settings()).unwrap();
        assert!((p.linf() - 1.0).abs() < 1e-9);
        assert!((p.osc() - 2.0).abs() < 1e-9);
        assert_eq!(ceiling_lower_bound(&p), 1);
    }

    #[test]
    fn ceiling_examples() {
        let m = ManifoldModel::circle();
        let p = time_profile(&m, &*constant(2.3), &settings()).unwrap();
        assert_eq!(ceiling_lower_bound(&p), 3);
        let p = time_profile(&m, &*constant(-2.3), &settings()).unwrap();
        assert_eq!(ceiling_lower_bound(&p), 3);
    }

    #[test]
    fn rescale_by_constant_doubles() {
        let m = ManifoldModel::torus3();
        let r = rescale_form_energy(&m, &constant(2.0), &sin_z(), &settings()).unwrap();
        assert!((r.energy_alpha_prime - 2.0 * r.energy_alpha).abs() < 1e-12);
        assert!(rescale_form_energy(&m, &constant(-1.0), &sin_z(), &settings()).is_err());
    }

    #[test]
    fn osc_sandwich_on_sin() {
        let m = ManifoldModel::torus3();
        let p = time_profile(&m, &*sin_z(), &settings()).unwrap();
        let b = osc_sandwich(&p);
        // |H|∞ = 1, osc = 2, mean = 0.
        assert!((b.lower_slack - 1.0).abs() < 1e-9);
        assert!((b.upper_slack - 1.0).abs() < 1e-9);
    }
}
