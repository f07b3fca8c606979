//! The symplectization `SN = N × ℝ_{>0}` with `ω = d(rα)`: lifts of
//! contactomorphisms, homogeneous Hamiltonians, the cutoff construction and
//! the time-reversal of a contact isotopy.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::energy::{simpson_weights, trapezoid_weights, Smoothstep};
use crate::error::{ContactError, Result};
use crate::flow::{
    flow_between, flow_with_variations, integrate_isotopy_sampled, ContactMap, Dopri5,
    IntegratorStats,
};
use crate::geometry::{ContactFrame, ManifoldModel, Point};
use crate::hamiltonian::{HamRef, TimeHamiltonian};

/// A point `(x, r)` of `SN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplPoint {
    pub x: Point,
    pub r: f64,
}

impl SymplPoint {
    pub fn new(x: Point, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(ContactError::Config(format!("r must be positive, got {r}")));
        }
        Ok(Self { x, r })
    }

    /// The `ℝ_{>0}` action `s·(x, r) = (x, s r)`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            x: self.x.clone(),
            r: self.r * s,
        }
    }
}

/// `ψ̄(x, r) = (ψ(x), r / λ_ψ(x))`.
pub fn lift_point(map: &dyn ContactMap, p: &SymplPoint) -> Result<SymplPoint> {
    let (y, g) = map.apply(&p.x)?;
    Ok(SymplPoint {
        x: y,
        r: p.r * (-g).exp(),
    })
}

/// `Dψ̄(x, 1)` in (frame, r) coordinates: blocks `Dψ`, `0`, `−λ⁻² dλ`, `λ⁻¹`.
pub fn lift_differential(map: &dyn ContactMap, x: &Point) -> Result<DMatrix<f64>> {
    let d = map.model().dim();
    let md = map.differential(x)?;
    let inv_lambda = (-md.g).exp();
    let mut out = DMatrix::zeros(d + 1, d + 1);
    out.view_mut((0, 0), (d, d)).copy_from(&md.jacobian);
    for j in 0..d {
        // dλ = λ dg, so −λ⁻² dλ = −λ⁻¹ dg
        out[(d, j)] = -inv_lambda * md.dg[j];
    }
    out[(d, d)] = inv_lambda;
    Ok(out)
}

/// Central-difference oracle for [`lift_differential`].
pub fn lift_differential_fd(map: &dyn ContactMap, x: &Point, step: f64) -> Result<DMatrix<f64>> {
    let m = map.model();
    let d = m.dim();
    let base = lift_point(
        map,
        &SymplPoint {
            x: x.clone(),
            r: 1.0,
        },
    )?;
    let mut out = DMatrix::zeros(d + 1, d + 1);
    for j in 0..=d {
        let (pp, pm) = if j < d {
            let mut e = DVector::zeros(d);
            e[j] = step;
            (
                SymplPoint {
                    x: m.retract(x, &e),
                    r: 1.0,
                },
                SymplPoint {
                    x: m.retract(x, &(-e)),
                    r: 1.0,
                },
            )
        } else {
            (
                SymplPoint {
                    x: x.clone(),
                    r: 1.0 + step,
                },
                SymplPoint {
                    x: x.clone(),
                    r: 1.0 - step,
                },
            )
        };
        let up = lift_point(map, &pp)?;
        let dn = lift_point(map, &pm)?;
        let dx = (m.log(&base.x, &up.x) - m.log(&base.x, &dn.x)) / (2.0 * step);
        for i in 0..d {
            out[(i, j)] = dx[i];
        }
        out[(d, j)] = (up.r - dn.r) / (2.0 * step);
    }
    Ok(out)
}

/// A Hamiltonian on `[0,1] × SN`.
pub trait SymplHamiltonian: Send + Sync + fmt::Debug {
    fn eval(&self, t: f64, x: &Point, r: f64) -> Result<f64>;

    /// Value, `x`-gradient (stored coordinates) and `∂_r`.
    fn eval_grad(&self, t: f64, x: &Point, r: f64) -> Result<(f64, DVector<f64>, f64)>;
}

/// `H̄(t, (x, r)) = r·H(t, x)`.
#[derive(Debug, Clone)]
pub struct HomogeneousLift {
    pub h: HamRef,
}

pub fn homogeneous_lift(h: HamRef) -> HomogeneousLift {
    HomogeneousLift { h }
}

impl HomogeneousLift {
    pub fn value(&self, t: f64, p: &SymplPoint) -> f64 {
        p.r * self.h.eval(t, &p.x)
    }
}

impl SymplHamiltonian for HomogeneousLift {
    fn eval(&self, t: f64, x: &Point, r: f64) -> Result<f64> {
        Ok(r * self.h.eval(t, x))
    }
    fn eval_grad(&self, t: f64, x: &Point, r: f64) -> Result<(f64, DVector<f64>, f64)> {
        let (v, g) = self.h.eval_grad(t, x);
        Ok((r * v, g * r, v))
    }
}

/// Flows `p` along the Hamiltonian vector field of `F` on `SN`
/// (convention `ι_X ω = −dF`), integrating `log r` for positivity.
pub fn sn_flow(
    m: &ManifoldModel,
    f: &dyn SymplHamiltonian,
    p: &SymplPoint,
    t_from: f64,
    t_to: f64,
    tol: f64,
) -> Result<(SymplPoint, IntegratorStats)> {
    let n = m.ambient_dim();
    let mut y0 = p.x.as_slice().to_vec();
    y0.push(p.r.ln());
    let mut stats = IntegratorStats::default();
    let out = Dopri5::new(tol).integrate(
        |t, y, dy| {
            let x = Point::from_column_slice(&y[..n]);
            let r = y[n].exp();
            let frame = ContactFrame::at(m, &x)?;
            let (_, dxf, fr) = f.eval_grad(t, &x, r)?;
            let (xn, rdot) = frame.symplectization_field(&dxf, fr, r);
            dy[..n].copy_from_slice(xn.as_slice());
            dy[n] = rdot / r;
            Ok(())
        },
        &y0,
        t_from,
        &[t_to],
        |y| m.project(&mut y[..n]),
        &mut stats,
    )?;
    let s = &out[0];
    Ok((
        SymplPoint {
            x: m.wrap(&Point::from_column_slice(&s[..n])),
            r: s[n].exp(),
        },
        stats,
    ))
}

/// Margin slack between the `δ/2` and `δ` neighbourhoods.
pub const CUTOFF_SLACK: f64 = 1e-6;

/// Cutoff `λ₀^{I,δ}`: `1` on `I^{δ/2}`, `0` outside `I^δ`, where
/// `I^κ = (e^{−κ}a, e^{κ}b)`; quintic smoothstep ramps in `log r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
}

impl CutoffProfile {
    pub fn new(a: f64, b: f64, delta: f64) -> Result<Self> {
        if !(a > 0.0 && b > a && delta > 4.0 * CUTOFF_SLACK) {
            return Err(ContactError::Config(format!(
                "cutoff needs 0 < a < b and δ > 0, got a={a}, b={b}, δ={delta}"
            )));
        }
        Ok(Self { a, b, delta })
    }

    pub fn neighbourhood(&self, kappa: f64) -> (f64, f64) {
        (self.a * (-kappa).exp(), self.b * kappa.exp())
    }

    fn ramps(&self) -> (Smoothstep, Smoothstep) {
        let (la, lb, d) = (self.a.ln(), self.b.ln(), self.delta);
        (
            Smoothstep {
                start: la - d + CUTOFF_SLACK,
                end: la - 0.5 * d - CUTOFF_SLACK,
            },
            Smoothstep {
                start: lb + 0.5 * d + CUTOFF_SLACK,
                end: lb + d - CUTOFF_SLACK,
            },
        )
    }

    pub fn value(&self, r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let l = r.ln();
        let (up, down) = self.ramps();
        up.value(l) * (1.0 - down.value(l))
    }

    /// `dλ₀/dr`.
    pub fn derivative(&self, r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let l = r.ln();
        let (up, down) = self.ramps();
        let dl = up.derivative(l) * (1.0 - down.value(l)) - up.value(l) * down.derivative(l);
        dl / r
    }

    /// `sup_r r·λ₀(r)`, located on a fine log grid over the outer ramp and
    /// polished by golden-section search.
    pub fn sup_r_lambda(&self) -> f64 {
        let (_, down) = self.ramps();
        let f = |l: f64| l.exp() * (1.0 - down.value(l));
        let (mut lo, mut hi) = (down.start, down.end);
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = hi - gr * (hi - lo);
            let d = lo + gr * (hi - lo);
            if f(c) > f(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        f(0.5 * (lo + hi)).max(self.b * (0.5 * self.delta).exp())
    }

    /// Checks `0 ≤ λ₀ ≤ 1`, `λ₀ = 1` on `I^{δ/2}` and `λ₀ = 0` outside `I^δ`
    /// on a grid of spacing `step` in `log r`.
    pub fn verify_support(&self, step: f64) -> bool {
        let (lo_out, hi_out) = self.neighbourhood(self.delta);
        let (lo_in, hi_in) = self.neighbourhood(0.5 * self.delta);
        let (l0, l1) = (lo_out.ln() - 1.0, hi_out.ln() + 1.0);
        let n = ((l1 - l0) / step).ceil() as usize;
        (0..=n).all(|k| {
            let r = (l0 + k as f64 * step).exp();
            let v = self.value(r);
            let in_range = (0.0..=1.0).contains(&v);
            let inner_ok = !(r >= lo_in && r <= hi_in) || v == 1.0;
            let outer_ok = (r > lo_out && r < hi_out) || v == 0.0;
            in_range && inner_ok && outer_ok
        })
    }
}

/// `H̄^{I,δ}(t, ȳ) = H̄(t, ȳ)·λ₀(r(ψ̄_t⁻¹ ȳ))`, with `ψ̄_t⁻¹` evaluated by
/// integrating the flow of `H` backward from time `t`.
#[derive(Debug, Clone)]
pub struct CutoffHamiltonian {
    pub model: ManifoldModel,
    pub h: HamRef,
    pub profile: CutoffProfile,
    pub tol: f64,
}

impl CutoffHamiltonian {
    /// `log r` shift of `ψ̄_t⁻¹` at `y`: the `r`-component of `ψ̄_t⁻¹(y, ρ)` is `ρ e^{−g_b}`.
    fn back_logconf(&self, t: f64, y: &Point) -> Result<f64> {
        if t == 0.0 || self.h.constant_value().is_some() {
            return Ok(0.0);
        }
        flow_between(&self.model, &*self.h, y, t, 0.0, self.tol)
            .map(|e| e.g)
            .map_err(|e| ContactError::InverseEvaluation(e.to_string()))
    }

    /// `λ₀` evaluated on `ψ̄_t⁻¹(y, ρ)`.
    pub fn cutoff_factor(&self, t: f64, y: &Point, rho: f64) -> Result<f64> {
        let gb = self.back_logconf(t, y)?;
        Ok(self.profile.value(rho * (-gb).exp()))
    }
}

pub fn cutoff(m: &ManifoldModel, h: HamRef, profile: CutoffProfile, tol: f64) -> CutoffHamiltonian {
    CutoffHamiltonian {
        model: m.clone(),
        h,
        profile,
        tol,
    }
}

impl SymplHamiltonian for CutoffHamiltonian {
    fn eval(&self, t: f64, x: &Point, r: f64) -> Result<f64> {
        let hv = self.h.eval(t, x);
        if hv == 0.0 {
            return Ok(0.0);
        }
        Ok(r * hv * self.cutoff_factor(t, x, r)?)
    }

    fn eval_grad(&self, t: f64, x: &Point, r: f64) -> Result<(f64, DVector<f64>, f64)> {
        let (hv, hg) = self.h.eval_grad(t, x);
        let gb = self.back_logconf(t, x)?;
        let rt = r * (-gb).exp();
        let lam = self.profile.value(rt);
        let dlam = self.profile.derivative(rt);
        let value = r * hv * lam;
        if dlam == 0.0 {
            return Ok((value, hg * (r * lam), hv * lam));
        }
        let var = flow_with_variations(&self.model, &*self.h, x, t, 0.0, self.tol)
            .map_err(|e| ContactError::InverseEvaluation(e.to_string()))?;
        // ∂(r̃)/∂y = −r̃ ∇g_b, ∂(r̃)/∂r = r̃/r
        let dx = hg * (r * lam) - var.grad_g * (r * hv * dlam * rt);
        let dr = hv * lam + hv * dlam * rt;
        Ok((value, dx, dr))
    }
}

/// Residual tables of the cutoff checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutoffReport {
    pub profile: CutoffProfile,
    /// Largest `|cutoff flow − ψ̄₁|` over in-band samples (chart distance plus `|Δ log r|`).
    pub c1_residual: f64,
    pub c1_samples: usize,
    pub c2_lhs: f64,
    pub c2_rhs: f64,
    pub c2_quadrature: f64,
    /// `rhs + quadrature − lhs`.
    pub c2_slack: f64,
    pub c2_samples: usize,
}

/// Settings of the cutoff verification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CutoffCheckSettings {
    pub c1_samples: usize,
    pub c2_samples: usize,
    pub time_intervals: usize,
    pub tol: f64,
}

impl Default for CutoffCheckSettings {
    fn default() -> Self {
        Self {
            c1_samples: 50,
            c2_samples: 64,
            time_intervals: 32,
            tol: 1e-10,
        }
    }
}

/// C1: the cutoff flow agrees with `ψ̄_t` on `I·N₁`.
/// C2: `∫|H̄^{I,δ}_t|_{L∞(SN)} ≤ e^δ·sup I·∫|H̄_t∘ψ̄_t|_{L∞(N₁)}` on samples.
pub fn verify_cutoff(
    m: &ManifoldModel,
    h: &HamRef,
    profile: CutoffProfile,
    settings: &CutoffCheckSettings,
    seed_points: &[Point],
    seed_rs: &[f64],
) -> Result<CutoffReport> {
    let cut = cutoff(m, h.clone(), profile, settings.tol);
    let lift = homogeneous_lift(h.clone());
    let tol = settings.tol;

    let c1: Vec<Result<f64>> = seed_points
        .par_iter()
        .zip(seed_rs.par_iter())
        .take(settings.c1_samples)
        .map(|(x, r)| {
            let p = SymplPoint {
                x: x.clone(),
                r: *r,
            };
            let (via_cut, _) = sn_flow(m, &cut, &p, 0.0, 1.0, tol)?;
            let (via_lift, _) = sn_flow(m, &lift, &p, 0.0, 1.0, tol)?;
            let end = flow_between(m, &**h, x, 0.0, 1.0, tol)?;
            let exact = SymplPoint {
                x: end.point,
                r: r * (-end.g).exp(),
            };
            let r1 = m.distance(&via_cut.x, &exact.x) + (via_cut.r / exact.r).ln().abs();
            let r2 = m.distance(&via_lift.x, &exact.x) + (via_lift.r / exact.r).ln().abs();
            Ok(r1.max(r2))
        })
        .collect();
    let c1 = c1.into_iter().collect::<Result<Vec<_>>>()?;
    let c1_residual = c1.iter().cloned().fold(0.0, f64::max);

    // C2 on forward traces: samples y = ψ_t(x) with an independent backward
    // evaluation of the cutoff factor on a fibre grid of ρ.
    let k = settings.time_intervals;
    let sup_ratio_grid: Vec<f64> = {
        let (lo, hi) = profile.neighbourhood(profile.delta);
        let n = 400;
        (0..=n)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / n as f64).exp())
            .collect()
    };
    let traces: Vec<Result<Vec<(f64, f64)>>> = seed_points
        .par_iter()
        .take(settings.c2_samples)
        .map(|x| {
            let tr = integrate_isotopy_sampled(m, &**h, x, tol, k)?;
            tr.times
                .iter()
                .zip(&tr.points)
                .zip(&tr.logconf)
                .map(|((t, y), g)| {
                    let y = Point::from_column_slice(y);
                    let hv = h.eval(*t, &y).abs();
                    let rhs = (-g).exp() * hv;
                    // fibre sup of |ρ H λ₀(ρ e^{−g_b})| with g_b recomputed backward
                    let gb = cut.back_logconf(*t, &y)?;
                    let lhs = sup_ratio_grid
                        .iter()
                        .map(|rt| {
                            let rho = rt * gb.exp();
                            rho * hv * profile.value(*rt)
                        })
                        .fold(0.0, f64::max);
                    Ok((lhs, rhs))
                })
                .collect()
        })
        .collect();
    let traces = traces.into_iter().collect::<Result<Vec<_>>>()?;
    let mut lhs_nodes = vec![0.0f64; k + 1];
    let mut rhs_nodes = vec![0.0f64; k + 1];
    for tr in &traces {
        for (i, (l, r)) in tr.iter().enumerate() {
            lhs_nodes[i] = lhs_nodes[i].max(*l);
            rhs_nodes[i] = rhs_nodes[i].max(*r);
        }
    }
    let ws = simpson_weights(k + 1);
    let wt = trapezoid_weights(k + 1);
    let integ = |v: &[f64], w: &[f64]| v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
    let factor = profile.delta.exp() * profile.b;
    let lhs = integ(&lhs_nodes, &ws);
    let rhs = factor * integ(&rhs_nodes, &ws);
    let quad = (integ(&lhs_nodes, &ws) - integ(&lhs_nodes, &wt)).abs()
        + factor * (integ(&rhs_nodes, &ws) - integ(&rhs_nodes, &wt)).abs();
    Ok(CutoffReport {
        profile,
        c1_residual,
        c1_samples: c1.len(),
        c2_lhs: lhs,
        c2_rhs: rhs,
        c2_quadrature: quad,
        c2_slack: rhs + quad - lhs,
        c2_samples: traces.len(),
    })
}

/// `K_t = (λ_{χ_t}·H_{1−t})∘χ_t⁻¹` for `χ_t = ψ₁ ψ_{1−t}⁻¹`, generating the
/// reversed path with the same endpoint.
#[derive(Debug, Clone)]
pub struct UsherReversed {
    pub model: ManifoldModel,
    pub h: HamRef,
    pub tol: f64,
}

pub fn usher_reverse(m: &ManifoldModel, h: HamRef, tol: f64) -> UsherReversed {
    UsherReversed {
        model: m.clone(),
        h,
        tol,
    }
}

impl UsherReversed {
    pub fn try_eval(&self, t: f64, y: &Point) -> Result<f64> {
        if let Some(c) = self.h.constant_value() {
            return Ok(c);
        }
        let e = flow_between(&self.model, &*self.h, y, 1.0, 1.0 - t, self.tol)
            .map_err(|e| ContactError::InverseEvaluation(e.to_string()))?;
        Ok((-e.g).exp() * self.h.eval(1.0 - t, &e.point))
    }

    /// `χ_t(x)` and `g_{χ_t}(x)`.
    pub fn chi(&self, t: f64, x: &Point) -> Result<(Point, f64)> {
        let back = flow_between(&self.model, &*self.h, x, 1.0 - t, 0.0, self.tol)?;
        let fwd = flow_between(&self.model, &*self.h, &back.point, 0.0, 1.0, self.tol)?;
        Ok((fwd.point, fwd.g + back.g))
    }
}

impl TimeHamiltonian for UsherReversed {
    fn eval(&self, t: f64, y: &Point) -> f64 {
        self.try_eval(t, y).unwrap_or(f64::NAN)
    }

    fn eval_grad(&self, t: f64, y: &Point) -> (f64, DVector<f64>) {
        if let Some(c) = self.h.constant_value() {
            return (c, DVector::zeros(y.len()));
        }
        match flow_with_variations(&self.model, &*self.h, y, 1.0, 1.0 - t, self.tol) {
            Ok(v) => {
                let w = (-v.g).exp();
                let (hv, hg) = self.h.eval_grad(1.0 - t, &v.point);
                let grad = (v.jacobian.transpose() * hg - v.grad_g * hv) * w;
                (w * hv, grad)
            }
            Err(_) => (f64::NAN, DVector::from_element(y.len(), f64::NAN)),
        }
    }

    fn has_analytic_gradient(&self) -> bool {
        true
    }

    fn constant_value(&self) -> Option<f64> {
        self.h.constant_value()
    }
}

/// U1/U2 residuals of the reversed path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UsherReport {
    /// `max |φ_K^1(x) − ψ₁(x)|` over samples.
    pub u1_residual: f64,
    pub u1_samples: usize,
    /// `max |K̄(t, χ̄_t x̄) − H̄(1−t, x̄)|` over samples.
    pub u2_residual: f64,
    pub u2_samples: usize,
}

pub fn verify_usher(
    k: &UsherReversed,
    u1_points: &[Point],
    u2_samples: &[(f64, Point, f64)],
    tol: f64,
) -> Result<UsherReport> {
    let m = &k.model;
    let u1: Vec<Result<f64>> = u1_points
        .par_iter()
        .map(|x| {
            let via_k = flow_between(m, k, x, 0.0, 1.0, tol)?;
            let via_h = flow_between(m, &*k.h, x, 0.0, 1.0, tol)?;
            Ok(m.distance(&via_k.point, &via_h.point) + (via_k.g - via_h.g).abs())
        })
        .collect();
    let u1 = u1.into_iter().collect::<Result<Vec<_>>>()?;
    let u2: Vec<Result<f64>> = u2_samples
        .par_iter()
        .map(|(t, x, r)| {
            let (cx, g) = k.chi(*t, x)?;
            let lifted_r = r * (-g).exp();
            let kbar = lifted_r * k.try_eval(*t, &cx)?;
            let hbar = r * k.h.eval(1.0 - t, x);
            Ok((kbar - hbar).abs())
        })
        .collect();
    let u2 = u2.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(UsherReport {
        u1_residual: u1.iter().cloned().fold(0.0, f64::max),
        u1_samples: u1.len(),
        u2_residual: u2.iter().cloned().fold(0.0, f64::max),
        u2_samples: u2.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{FlowMap, IdentityMap, ReebMap};
    use crate::hamiltonian::{constant, table};
    use crate::terms::{Factor, Term, TermTable};
    use std::sync::Arc;

    fn sin_z() -> HamRef {
        table(TermTable::new(vec![Term::new(
            1.0,
            0,
            vec![Factor::Sin { coord: 2, k: 1 }],
        )]))
    }

    fn non_strict() -> HamRef {
        table(TermTable::new(vec![
            Term::new(0.3, 0, vec![Factor::Cos { coord: 0, k: 1 }]),
            Term::new(0.2, 1, vec![Factor::Sin { coord: 2, k: 1 }]),
        ]))
    }

    #[test]
    fn identity_lift_and_differential() {
        let m = ManifoldModel::torus3();
        let id = IdentityMap { model: m.clone() };
        let p = SymplPoint::new(Point::from_vec(vec![0.1, 0.2, 0.3]), 1.7).unwrap();
        assert_eq!(lift_point(&id, &p).unwrap(), p);
        let d = lift_differential(&id, &p.x).unwrap();
        assert!((d - DMatrix::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn strict_lift_keeps_r() {
        let m = ManifoldModel::sphere3();
        let reeb = ReebMap::new(m.clone(), 0.4);
        let x = m.param_point(&[0.1, 0.5, 0.2]);
        let l = lift_point(
            &reeb,
            &SymplPoint {
                x: x.clone(),
                r: 2.0,
            },
        )
        .unwrap();
        assert_eq!(l.r, 2.0);
        let d = lift_differential(&reeb, &x).unwrap();
        assert!(d.row(3).iter().take(3).all(|v| *v == 0.0) && d[(3, 3)] == 1.0);
    }

    #[test]
    fn lift_differential_matches_fd() {
        let m = ManifoldModel::torus3();
        let f = FlowMap::new(m.clone(), non_strict(), 1e-12);
        let x = Point::from_vec(vec![0.15, 0.4, 0.3]);
        let a = lift_differential(&f, &x).unwrap();
        let b = lift_differential_fd(&f, &x, 1e-5).unwrap();
        assert!((a - b).amax() < 1e-6);
    }

    #[test]
    fn homogeneous_lift_flow_is_lifted_flow() {
        let m = ManifoldModel::torus3();
        let h = non_strict();
        let x = Point::from_vec(vec![0.3, 0.1, 0.2]);
        let p = SymplPoint {
            x: x.clone(),
            r: 1.3,
        };
        let (q, _) = sn_flow(&m, &homogeneous_lift(h.clone()), &p, 0.0, 1.0, 1e-11).unwrap();
        let l = lift_point(&FlowMap::new(m.clone(), h, 1e-12), &p).unwrap();
        assert!(m.distance(&q.x, &l.x) < 1e-8);
        assert!((q.r - l.r).abs() < 1e-8);
    }

    #[test]
    fn homogeneous_lift_examples() {
        let one = homogeneous_lift(constant(1.0));
        let x = Point::from_vec(vec![0.1]);
        assert_eq!(
            one.value(
                0.3,
                &SymplPoint {
                    x: x.clone(),
                    r: 2.5
                }
            ),
            2.5
        );
        let h = homogeneous_lift(sin_z());
        let y = Point::from_vec(vec![0.0, 0.0, 0.1]);
        let v1 = h.value(
            0.0,
            &SymplPoint {
                x: y.clone(),
                r: 1.0,
            },
        );
        let v2 = h.value(0.0, &SymplPoint { x: y, r: 2.0 });
        assert_eq!(v2, 2.0 * v1);
    }

    #[test]
    fn cutoff_profile_support() {
        let p = CutoffProfile::new((-0.2f64).exp(), 0.2f64.exp(), 0.1).unwrap();
        assert!(p.verify_support(1e-3));
        assert!(p.sup_r_lambda() <= p.b * p.delta.exp());
        assert!(CutoffProfile::new(1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn cutoff_vanishes_outside_and_matches_inside() {
        let m = ManifoldModel::torus3();
        let prof = CutoffProfile::new(0.8, 1.2, 0.1).unwrap();
        let c = cutoff(&m, non_strict(), prof, 1e-10);
        let x = Point::from_vec(vec![0.1, 0.2, 0.3]);
        assert_eq!(c.eval(0.0, &x, 1.0).unwrap(), 1.0 * c.h.eval(0.0, &x));
        assert_eq!(c.eval(0.0, &x, 0.5).unwrap(), 0.0);
        // at t = 0.7, a fibre point far above the band maps outside I^δ
        assert_eq!(c.eval(0.7, &x, 10.0).unwrap(), 0.0);
        let zero = cutoff(&m, constant(0.0), prof, 1e-10);
        assert_eq!(zero.eval(0.5, &x, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn usher_constant_and_strict_autonomous() {
        let m = ManifoldModel::torus3();
        let k = usher_reverse(&m, constant(0.7), 1e-10);
        assert_eq!(k.constant_value(), Some(0.7));
        let k = usher_reverse(&m, sin_z(), 1e-11);
        let y = Point::from_vec(vec![0.2, 0.3, 0.15]);
        assert!((k.eval(0.4, &y) - sin_z().eval(0.6, &y)).abs() < 1e-9);
    }

    #[test]
    fn usher_u1_u2_small_case() {
        let m = ManifoldModel::torus3();
        let k = usher_reverse(&m, non_strict(), 1e-11);
        let pts = vec![Point::from_vec(vec![0.2, 0.3, 0.15])];
        let u2 = vec![(0.3, Point::from_vec(vec![0.7, 0.1, 0.45]), 1.2)];
        let rep = verify_usher(&k, &pts, &u2, 1e-10).unwrap();
        assert!(rep.u1_residual < 1e-6, "{rep:?}");
        assert!(rep.u2_residual < 1e-8, "{rep:?}");
        let _ = Arc::new(k);
    }
}
