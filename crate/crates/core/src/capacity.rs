//! Product regions in the symplectization, their heights and Gromov-radius
//! lower bounds, displacement checks, and energy–capacity audits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::energy::{time_profile, EnergySettings};
use crate::error::{ContactError, Result};
use crate::flow::{ContactMap, FlowMap};
use crate::geometry::{ManifoldModel, Point};
use crate::hamiltonian::HamRef;
use crate::symplectization::{lift_point, SymplPoint};
use crate::translated::halton_lattice;

/// Relative loss allowed when a rectangle is replaced by a disk of equal area.
pub const EMBED_EPS: f64 = 1e-3;

pub type Interval = (f64, f64);

/// Unit-scale description of a box. The `r`-scaling action multiplies every
/// coordinate that carries a factor of `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoxShape {
    /// `Π base_i × [r_lo, r_hi]` in `(x, r)`.
    Chart { base: Vec<Interval>, r: Interval },
    /// `[X] × [y] × [θ] × [r]` on the Heisenberg chart, with `X = r x`, where
    /// `d(rα) = dr∧dθ + dX∧dy`.
    Heisenberg {
        big_x: Interval,
        y: Interval,
        theta: Interval,
        r: Interval,
    },
    /// `(p, x) × (q, y)` on `T³` with `p = r cos 2πz`, `q = r sin 2πz`, where
    /// `d(rα) = dp∧dx + dq∧dy`.
    TorusDarboux {
        p: Interval,
        x: Interval,
        q: Interval,
        y: Interval,
    },
}

/// A compact product set `A ⊂ SN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub shape: BoxShape,
    /// Declared symplectic factor areas at unit scale, for chart boxes.
    #[serde(default)]
    pub factors: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

fn width(i: Interval) -> f64 {
    i.1 - i.0
}

fn check_interval(name: &str, i: Interval) -> Result<()> {
    if !(i.0.is_finite() && i.1.is_finite() && i.0 < i.1) {
        return Err(ContactError::Config(format!(
            "{name} interval ({}, {}) is empty",
            i.0, i.1
        )));
    }
    Ok(())
}

/// Distance from `v` to `[lo, hi]`, modulo `period` when given.
fn interval_distance(v: f64, i: Interval, period: Option<f64>) -> f64 {
    match period {
        Some(p) if width(i) >= p => 0.0,
        Some(p) => {
            let off = (v - i.0).rem_euclid(p);
            if off <= width(i) {
                0.0
            } else {
                (off - width(i)).min(p - off)
            }
        }
        None => (i.0 - v).max(v - i.1).max(0.0),
    }
}

fn contains_interval(outer: Interval, inner: Interval) -> bool {
    outer.0 <= inner.0 && inner.1 <= outer.1
}

impl BoxSet {
    pub fn chart(base: Vec<Interval>, r: Interval) -> Result<Self> {
        let b = Self {
            shape: BoxShape::Chart { base, r },
            factors: None,
            scale: 1.0,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn with_factors(mut self, areas: Vec<f64>) -> Result<Self> {
        self.factors = Some(areas);
        self.validate()?;
        Ok(self)
    }

    /// `A(t′) = B(t′) × B′(t′)`: `B′ = {δ ≤ r ≤ 1−δ, 0 ≤ θ ≤ t′/(1−2δ)}` and
    /// `B = {|X| ≤ εδ, 0 ≤ y ≤ t′/(2εδ)}`, both of area `t′`.
    pub fn heisenberg_a(t_prime: f64, delta: f64, eps: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5 && eps > 0.0 && t_prime > 0.0) {
            return Err(ContactError::Config(format!(
                "A(t') needs t' > 0, 0 < δ < 1/2, ε > 0; got ({t_prime}, {delta}, {eps})"
            )));
        }
        let b = Self {
            shape: BoxShape::Heisenberg {
                big_x: (-eps * delta, eps * delta),
                y: (0.0, t_prime / (2.0 * eps * delta)),
                theta: (0.0, t_prime / (1.0 - 2.0 * delta)),
                r: (delta, 1.0 - delta),
            },
            factors: None,
            scale: 1.0,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn torus_darboux(p: Interval, x: Interval, q: Interval, y: Interval) -> Result<Self> {
        let b = Self {
            shape: BoxShape::TorusDarboux { p, x, q, y },
            factors: None,
            scale: 1.0,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(ContactError::Config(format!(
                "scale {} must be positive",
                self.scale
            )));
        }
        match &self.shape {
            BoxShape::Chart { base, r } => {
                for (i, b) in base.iter().enumerate() {
                    check_interval(&format!("base[{i}]"), *b)?;
                }
                check_interval("r", *r)?;
                if r.0 <= 0.0 {
                    return Err(ContactError::Config("r_lo must be positive".into()));
                }
            }
            BoxShape::Heisenberg { big_x, y, theta, r } => {
                check_interval("X", *big_x)?;
                check_interval("y", *y)?;
                check_interval("theta", *theta)?;
                check_interval("r", *r)?;
                if r.0 <= 0.0 {
                    return Err(ContactError::Config("r_lo must be positive".into()));
                }
            }
            BoxShape::TorusDarboux { p, x, q, y } => {
                for (n, i) in [("p", p), ("x", x), ("q", q), ("y", y)] {
                    check_interval(n, *i)?;
                }
                if width(*x) > 1.0 || width(*y) > 1.0 {
                    return Err(ContactError::Config("x and y widths must be ≤ 1".into()));
                }
                if self.unit_r_range().0 <= 0.0 {
                    return Err(ContactError::Config("(p, q) rectangle meets r = 0".into()));
                }
            }
        }
        if let Some(f) = &self.factors {
            if f.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
                return Err(ContactError::Config(
                    "factor areas must be non-negative".into(),
                ));
            }
        }
        Ok(())
    }

    /// `λ·A` for the action `(x, r) ↦ (x, λr)`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut b = self.clone();
        b.scale *= lambda;
        b
    }

    fn unit_r_range(&self) -> Interval {
        match &self.shape {
            BoxShape::Chart { r, .. } | BoxShape::Heisenberg { r, .. } => *r,
            BoxShape::TorusDarboux { p, q, .. } => {
                let near = |i: Interval| {
                    if i.0 > 0.0 {
                        i.0
                    } else if i.1 < 0.0 {
                        -i.1
                    } else {
                        0.0
                    }
                };
                let far = |i: Interval| i.0.abs().max(i.1.abs());
                (near(*p).hypot(near(*q)), far(*p).hypot(far(*q)))
            }
        }
    }

    /// `(inf r, sup r)` over the set.
    pub fn r_range(&self) -> Interval {
        let (lo, hi) = self.unit_r_range();
        (self.scale * lo, self.scale * hi)
    }

    fn unit_areas(&self) -> Option<Vec<f64>> {
        match &self.shape {
            BoxShape::Chart { base, r } => {
                if let Some(f) = &self.factors {
                    Some(f.clone())
                } else if base.len() == 1 {
                    // S¹-type base: d(rα) = dr∧dθ.
                    Some(vec![width(base[0]) * width(*r)])
                } else {
                    None
                }
            }
            BoxShape::Heisenberg { big_x, y, theta, r } => {
                Some(vec![width(*big_x) * width(*y), width(*r) * width(*theta)])
            }
            BoxShape::TorusDarboux { p, x, q, y } => {
                Some(vec![width(*p) * width(*x), width(*q) * width(*y)])
            }
        }
    }

    pub fn factor_areas(&self) -> Option<Vec<f64>> {
        self.unit_areas()
            .map(|a| a.into_iter().map(|v| v * self.scale).collect())
    }

    /// Componentwise inclusion of boxes of the same shape and scale.
    pub fn contains_box(&self, other: &BoxSet) -> bool {
        if self.scale != other.scale {
            return false;
        }
        match (&self.shape, &other.shape) {
            (BoxShape::Chart { base: b1, r: r1 }, BoxShape::Chart { base: b2, r: r2 }) => {
                b1.len() == b2.len()
                    && contains_interval(*r1, *r2)
                    && b1.iter().zip(b2).all(|(a, b)| contains_interval(*a, *b))
            }
            (
                BoxShape::Heisenberg {
                    big_x: a1,
                    y: a2,
                    theta: a3,
                    r: a4,
                },
                BoxShape::Heisenberg {
                    big_x: b1,
                    y: b2,
                    theta: b3,
                    r: b4,
                },
            ) => [(a1, b1), (a2, b2), (a3, b3), (a4, b4)]
                .iter()
                .all(|(a, b)| contains_interval(**a, **b)),
            (
                BoxShape::TorusDarboux {
                    p: a1,
                    x: a2,
                    q: a3,
                    y: a4,
                },
                BoxShape::TorusDarboux {
                    p: b1,
                    x: b2,
                    q: b3,
                    y: b4,
                },
            ) => [(a1, b1), (a2, b2), (a3, b3), (a4, b4)]
                .iter()
                .all(|(a, b)| contains_interval(**a, **b)),
            _ => false,
        }
    }

    pub fn check_model(&self, m: &ManifoldModel) -> Result<()> {
        let ok = match &self.shape {
            BoxShape::Chart { base, .. } => !m.is_constrained() && base.len() == m.dim(),
            BoxShape::Heisenberg { .. } => m.name().starts_with("Heisenberg"),
            BoxShape::TorusDarboux { .. } => m.name() == "Torus3",
        };
        if ok {
            Ok(())
        } else {
            Err(ContactError::UnsupportedSet(format!(
                "box shape {:?} does not live on {}",
                self.shape_name(),
                m.name()
            )))
        }
    }

    pub fn shape_name(&self) -> &'static str {
        match self.shape {
            BoxShape::Chart { .. } => "chart",
            BoxShape::Heisenberg { .. } => "heisenberg",
            BoxShape::TorusDarboux { .. } => "torus_darboux",
        }
    }

    /// Box dimension `2n + 2`.
    pub fn dim(&self) -> usize {
        match &self.shape {
            BoxShape::Chart { base, .. } => base.len() + 1,
            _ => 4,
        }
    }

    /// Point of the set at unit-cube parameters `u`.
    pub fn sample(&self, u: &[f64]) -> SymplPoint {
        let lerp = |i: Interval, s: f64| i.0 + s * width(i);
        let k = self.scale;
        let (x, r) = match &self.shape {
            BoxShape::Chart { base, r } => {
                let x: Vec<f64> = base.iter().zip(u).map(|(b, s)| lerp(*b, *s)).collect();
                (x, k * lerp(*r, u[base.len()]))
            }
            BoxShape::Heisenberg { big_x, y, theta, r } => {
                let rr = k * lerp(*r, u[3]);
                let bx = k * lerp(*big_x, u[0]);
                (vec![bx / rr, lerp(*y, u[1]), lerp(*theta, u[2])], rr)
            }
            BoxShape::TorusDarboux { p, x, q, y } => {
                let (pp, qq) = (k * lerp(*p, u[0]), k * lerp(*q, u[2]));
                let z = qq.atan2(pp) / TAU;
                (
                    vec![
                        lerp(*x, u[1]).rem_euclid(1.0),
                        lerp(*y, u[3]).rem_euclid(1.0),
                        z.rem_euclid(1.0),
                    ],
                    pp.hypot(qq),
                )
            }
        };
        SymplPoint {
            x: Point::from_vec(x),
            r,
        }
    }

    /// Euclidean distance in the box coordinates from `(x, r)` to the set.
    pub fn distance(&self, m: &ManifoldModel, p: &SymplPoint) -> f64 {
        let k = self.scale;
        let per = |i: usize| m.chart().get(i).filter(|c| c.periodic).map(|c| c.width());
        let parts: Vec<f64> = match &self.shape {
            BoxShape::Chart { base, r } => base
                .iter()
                .enumerate()
                .map(|(i, b)| interval_distance(p.x[i], *b, per(i)))
                .chain(std::iter::once(interval_distance(
                    p.r,
                    (k * r.0, k * r.1),
                    None,
                )))
                .collect(),
            BoxShape::Heisenberg { big_x, y, theta, r } => vec![
                interval_distance(p.r * p.x[0], (k * big_x.0, k * big_x.1), None),
                interval_distance(p.x[1], *y, None),
                interval_distance(p.x[2], *theta, None),
                interval_distance(p.r, (k * r.0, k * r.1), None),
            ],
            BoxShape::TorusDarboux { p: pi, x, q, y } => {
                let (s, c) = (TAU * p.x[2]).sin_cos();
                vec![
                    interval_distance(p.r * c, (k * pi.0, k * pi.1), None),
                    interval_distance(p.x[0], *x, Some(1.0)),
                    interval_distance(p.r * s, (k * q.0, k * q.1), None),
                    interval_distance(p.x[1], *y, Some(1.0)),
                ]
            }
        };
        parts.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `h(A) = sup_A r`.
pub fn height(b: &BoxSet) -> f64 {
    b.r_range().1
}

/// `min(areas)·(1 − ε_embed)`; rectangles embed disks up to the ε loss and a
/// ball of the smallest capacity embeds in the product.
pub fn gromov_lower_bound(b: &BoxSet) -> Result<f64> {
    let areas = b.factor_areas().ok_or_else(|| {
        ContactError::UnsupportedSet("box carries no symplectic factorization".into())
    })?;
    Ok(min_area(&areas) * (1.0 - EMBED_EPS))
}

fn min_area(a: &[f64]) -> f64 {
    a.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0)
}

/// `ĉ(A) = c(A)/h(A)`, evaluated at unit scale so that `ĉ(λ·A) = ĉ(A)` holds
/// bit for bit.
pub fn hat_c(b: &BoxSet) -> Result<f64> {
    let areas = b.unit_areas().ok_or_else(|| {
        ContactError::UnsupportedSet("box carries no symplectic factorization".into())
    })?;
    Ok(min_area(&areas) * (1.0 - EMBED_EPS) / b.unit_r_range().1)
}

/// `v_m = π^{m/2} / Γ(m/2 + 1)` for even `m = 2k`.
pub fn unit_ball_volume(m: usize) -> f64 {
    assert!(m.is_multiple_of(2), "even dimensions only");
    let k = m / 2;
    PI.powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>()
}

/// Volume bound `π/v_{2n+2}^{1/(n+1)} · vol^{1/(n+1)}` on `ĉ`, using
/// `vol(N)` for closed models and the volume of the projected box otherwise.
pub fn volume_cap(m: &ManifoldModel, b: &BoxSet) -> Option<f64> {
    let n1 = (m.half_dim() + 1) as f64;
    let vol = if m.is_closed() {
        m.total_volume()
    } else {
        match &b.shape {
            BoxShape::Chart { base, .. } if m.name().starts_with("Heisenberg") => {
                base.iter().map(|i| width(*i)).product()
            }
            BoxShape::Heisenberg { big_x, y, theta, r } => {
                let (lo, hi) = (b.scale * r.0, b.scale * r.1);
                let xs =
                    [big_x.0 / lo, big_x.0 / hi, big_x.1 / lo, big_x.1 / hi].map(|v| v * b.scale);
                let xw = xs.iter().cloned().fold(f64::MIN, f64::max)
                    - xs.iter().cloned().fold(f64::MAX, f64::min);
                xw * width(*y) * width(*theta)
            }
            _ => return None,
        }
    };
    Some(PI / unit_ball_volume(2 * m.half_dim() + 2).powf(1.0 / n1) * vol.powf(1.0 / n1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Displacement {
    Displaced,
    NotDisplaced,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisplacementReport {
    pub verdict: Displacement,
    pub samples: usize,
    pub margin: f64,
    /// Smallest distance from an image sample to the box.
    pub min_distance: f64,
    pub images_inside: usize,
    pub disclaimer: String,
}

/// Pushes lattice samples of `B` through the lifted map and measures their
/// distance to `B`. Sampling can only certify displacement up to the margin
/// and the sample density.
pub fn displacement_check_map(
    map: &dyn ContactMap,
    b: &BoxSet,
    samples: usize,
    margin: f64,
    seed: u64,
) -> Result<DisplacementReport> {
    let m = map.model();
    b.check_model(m)?;
    if samples < 100 {
        return Err(ContactError::Config(format!("samples = {samples} < 100")));
    }
    if !(margin >= 0.0) {
        return Err(ContactError::Config("margin must be non-negative".into()));
    }
    let lattice = halton_lattice(samples, b.dim(), seed);
    let dists: Vec<f64> = lattice
        .par_iter()
        .map(|u| -> Result<f64> {
            let p = b.sample(u);
            let img = lift_point(map, &p)?;
            Ok(b.distance(m, &img))
        })
        .collect::<Result<_>>()?;
    let min_distance = dists.iter().cloned().fold(f64::INFINITY, f64::min);
    let images_inside = dists.iter().filter(|d| **d == 0.0).count();
    let verdict = if images_inside > 0 {
        Displacement::NotDisplaced
    } else if min_distance > margin {
        Displacement::Displaced
    } else {
        Displacement::Inconclusive
    };
    Ok(DisplacementReport {
        verdict,
        samples,
        margin,
        min_distance,
        images_inside,
        disclaimer: format!(
            "sampled with {samples} lattice points at margin {margin:e}; \
             displacement is certified only up to sample density"
        ),
    })
}

pub fn displacement_check(
    m: &ManifoldModel,
    h: &HamRef,
    b: &BoxSet,
    samples: usize,
    margin: f64,
    tol: f64,
) -> Result<DisplacementReport> {
    let map = FlowMap::new(m.clone(), h.clone(), tol);
    displacement_check_map(&map, b, samples, margin, 0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    /// Path energy plus its quadrature bound.
    pub energy_ub: f64,
    pub quarter_hat_c_lb: f64,
    pub slack: f64,
    pub samples: usize,
    pub margin: f64,
    pub holds: bool,
    pub volume_cap: Option<f64>,
    pub embed_eps: f64,
}

/// Tolerance on the energy–capacity inequality.
pub const AUDIT_TOL: f64 = 1e-6;

/// Checks `|ψ|_α ≥ ¼ ĉ(B)` for a displacement certified by `disp`. A
/// violation points at a bound or sampling bug, since the inequality itself
/// is a theorem.
pub fn energy_capacity_audit(
    m: &ManifoldModel,
    h: &HamRef,
    b: &BoxSet,
    disp: &DisplacementReport,
    energy: &EnergySettings,
) -> Result<AuditReport> {
    if disp.verdict != Displacement::Displaced {
        return Err(ContactError::AuditRefused(format!(
            "displacement verdict is {:?}",
            disp.verdict
        )));
    }
    let profile = time_profile(m, &**h, energy)?;
    let energy_ub = profile.linf() + profile.linf_bound();
    let quarter = 0.25 * hat_c(b)?;
    let slack = energy_ub - quarter;
    Ok(AuditReport {
        energy_ub,
        quarter_hat_c_lb: quarter,
        slack,
        samples: disp.samples,
        margin: disp.margin,
        holds: slack >= -AUDIT_TOL,
        volume_cap: volume_cap(m, b),
        embed_eps: EMBED_EPS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::constant;
    use crate::hamiltonian::FnHamiltonian;
    use std::sync::Arc;

    fn circle_box() -> BoxSet {
        BoxSet::chart(vec![(0.0, 0.1)], (0.9, 1.1)).unwrap()
    }

    #[test]
    fn height_examples() {
        let b = BoxSet::chart(vec![(0.0, 0.1)], (0.5, 2.0)).unwrap();
        assert_eq!(height(&b), 2.0);
        assert!((height(&b.scaled(3.0)) - 6.0).abs() < 1e-15);
        let a = BoxSet::heisenberg_a(0.2, 0.05, 0.1).unwrap();
        assert!((height(&a) - 0.95).abs() < 1e-15);
    }

    #[test]
    fn gromov_bounds() {
        let a = BoxSet::heisenberg_a(0.2, 0.05, 0.1).unwrap();
        let areas = a.factor_areas().unwrap();
        assert!((areas[0] - 0.2).abs() < 1e-12 && (areas[1] - 0.2).abs() < 1e-12);
        assert!((gromov_lower_bound(&a).unwrap() - 0.2 * (1.0 - 1e-3)).abs() < 1e-12);

        let b = BoxSet::chart(vec![(0.0, 1.0); 3], (1.0, 2.0))
            .unwrap()
            .with_factors(vec![1.0, 2.0])
            .unwrap();
        assert!((gromov_lower_bound(&b).unwrap() - (1.0 - 1e-3)).abs() < 1e-15);
        assert!((hat_c(&b).unwrap() - (1.0 - 1e-3) / 2.0).abs() < 1e-15);

        let z = BoxSet::chart(vec![(0.0, 1.0); 3], (1.0, 2.0))
            .unwrap()
            .with_factors(vec![0.0, 2.0])
            .unwrap();
        assert_eq!(gromov_lower_bound(&z).unwrap(), 0.0);

        let bare = BoxSet::chart(vec![(0.0, 1.0); 3], (1.0, 2.0)).unwrap();
        assert!(matches!(
            gromov_lower_bound(&bare),
            Err(ContactError::UnsupportedSet(_))
        ));
    }

    #[test]
    fn hat_c_is_exactly_scale_invariant() {
        let a = BoxSet::heisenberg_a(0.3, 0.1, 0.2).unwrap();
        let c = hat_c(&a).unwrap();
        assert_eq!(hat_c(&a.scaled(3.7)).unwrap(), c);
        let t = BoxSet::torus_darboux((0.5, 0.7), (0.0, 0.2), (0.1, 0.3), (0.4, 0.5)).unwrap();
        assert_eq!(hat_c(&t.scaled(3.7)).unwrap(), hat_c(&t).unwrap());
        assert!((height(&t.scaled(2.0)) - 2.0 * 0.7f64.hypot(0.3)).abs() < 1e-14);
    }

    #[test]
    fn samples_lie_in_the_box() {
        let m = ManifoldModel::torus3();
        let t = BoxSet::torus_darboux((0.5, 0.7), (0.9, 1.1), (0.1, 0.3), (0.4, 0.5))
            .unwrap()
            .scaled(1.5);
        for u in halton_lattice(50, 4, 3) {
            let p = t.sample(&u);
            assert!(t.distance(&m, &p) < 1e-12);
            assert!(m.contains(&p.x));
        }
        let hm = ManifoldModel::heisenberg();
        let a = BoxSet::heisenberg_a(0.01, 0.1, 0.5).unwrap();
        for u in halton_lattice(50, 4, 3) {
            assert!(a.distance(&hm, &a.sample(&u)) < 1e-12);
        }
    }

    #[test]
    fn identity_does_not_displace() {
        let m = ManifoldModel::circle();
        let d = displacement_check(&m, &constant(0.0), &circle_box(), 100, 1e-3, 1e-10).unwrap();
        assert_eq!(d.verdict, Displacement::NotDisplaced);
    }

    #[test]
    fn circle_rotation_displaces_and_audits() {
        let m = ManifoldModel::circle();
        let h = constant(0.5);
        let b = circle_box();
        let d = displacement_check(&m, &h, &b, 200, 1e-3, 1e-10).unwrap();
        assert_eq!(d.verdict, Displacement::Displaced);
        assert!(d.min_distance >= 0.4 - 1e-9 && d.min_distance < 0.41);
        let e = EnergySettings::default().with_grid(8).with_time_nodes(5);
        let audit = energy_capacity_audit(&m, &h, &b, &d, &e).unwrap();
        assert!(audit.holds);
        assert!((audit.energy_ub - 0.5).abs() < 1e-12);
        let cap = audit.volume_cap.unwrap();
        assert!(hat_c(&b).unwrap() <= cap);

        let bs = b.scaled(2.5);
        let ds = displacement_check(&m, &h, &bs, 200, 1e-3, 1e-10).unwrap();
        assert_eq!(ds.verdict, Displacement::Displaced);
        let audit_s = energy_capacity_audit(&m, &h, &bs, &ds, &e).unwrap();
        assert_eq!(audit_s.quarter_hat_c_lb, audit.quarter_hat_c_lb);
    }

    #[test]
    fn audit_refuses_without_displacement() {
        let m = ManifoldModel::circle();
        let b = circle_box();
        let d = displacement_check(&m, &constant(0.0), &b, 100, 1e-3, 1e-10).unwrap();
        let e = EnergySettings::default().with_grid(8).with_time_nodes(5);
        assert!(matches!(
            energy_capacity_audit(&m, &constant(0.0), &b, &d, &e),
            Err(ContactError::AuditRefused(_))
        ));
    }

    #[test]
    fn conformal_factor_lifts_the_box() {
        let m = ManifoldModel::torus3();
        let full = BoxSet::chart(vec![(0.0, 1.0); 3], (0.9, 1.1)).unwrap();
        let strict = displacement_check(&m, &constant(0.3), &full, 100, 1e-3, 1e-10).unwrap();
        assert_eq!(strict.verdict, Displacement::NotDisplaced);

        // dH(R) = 2πa cos(2πx) cos(2πz) ≈ −2πa near x = ½, z = 0, so λ⁻¹ grows
        // past the r-range of the box.
        let a = 0.06;
        let h: HamRef = Arc::new(
            FnHamiltonian::new("a sin 2πx", move |_, x: &Point| a * (TAU * x[0]).sin())
                .autonomous(),
        );
        let local =
            BoxSet::chart(vec![(0.48, 0.52), (0.0, 1.0), (-0.02, 0.02)], (0.9, 1.1)).unwrap();
        let d = displacement_check(&m, &h, &local, 100, 1e-3, 1e-10).unwrap();
        assert_eq!(d.verdict, Displacement::Displaced, "{d:?}");
    }

    #[test]
    fn monotone_under_inclusion() {
        let small = BoxSet::torus_darboux((0.5, 0.6), (0.0, 0.2), (0.1, 0.2), (0.4, 0.5)).unwrap();
        let big = BoxSet::torus_darboux((0.5, 0.7), (0.0, 0.3), (0.1, 0.3), (0.4, 0.6)).unwrap();
        assert!(big.contains_box(&small));
        assert!(height(&big) >= height(&small));
        assert!(gromov_lower_bound(&big).unwrap() >= gromov_lower_bound(&small).unwrap());
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-15);
    }
}
