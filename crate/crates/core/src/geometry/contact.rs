//! Pointwise linear algebra of contact Hamiltonians.
//!
//! In a tangent frame with `a = α(e_i)` and `Ω_ij = dα(e_i, e_j)`, the two
//! defining equations `α(Y) = H`, `ι_Y dα = −dH + dH(R)α` combine into
//! `K Y = −dH + (dH(R) + H) a` with `K = −Ω + a aᵀ`. The same matrix gives the
//! Reeb field through `K R = a`.

use nalgebra::{DMatrix, DVector, LU};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifold::{ManifoldModel, Point};
use crate::error::{ContactError, Result};
use crate::hamiltonian::TimeHamiltonian;
use crate::linalg::condition_number;

/// Threshold above which the contact system counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Factorized contact system at one point.
pub struct ContactFrame {
    frame: Option<DMatrix<f64>>,
    a: DVector<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    reeb: DVector<f64>,
}

impl ContactFrame {
    pub fn at(m: &ManifoldModel, x: &Point) -> Result<Self> {
        let (a, om) = m.frame_forms(x);
        let k = &a * a.transpose() - om;
        let lu = k.clone().lu();
        // Cheap pivot screen first; the SVD only runs on suspicious systems.
        let u = lu.u();
        let diag: Vec<f64> = u.diagonal().iter().map(|v| v.abs()).collect();
        let dmax = diag.iter().cloned().fold(0.0, f64::max);
        let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(dmin > dmax * 1e-8) {
            let cond = condition_number(&k);
            if !(cond <= SINGULAR_CONDITION) {
                return Err(ContactError::SingularSystem {
                    cond,
                    at: format!("{:?}", x.as_slice()),
                });
            }
        }
        let reeb = lu.solve(&a).ok_or_else(|| ContactError::SingularSystem {
            cond: f64::INFINITY,
            at: format!("{:?}", x.as_slice()),
        })?;
        let frame = (!m.has_identity_frame()).then(|| m.frame(x));
        Ok(Self { frame, a, lu, reeb })
    }

    fn to_ambient(&self, v: DVector<f64>) -> DVector<f64> {
        match &self.frame {
            Some(f) => f * v,
            None => v,
        }
    }

    fn to_frame(&self, covector: &DVector<f64>) -> DVector<f64> {
        match &self.frame {
            Some(f) => f.transpose() * covector,
            None => covector.clone(),
        }
    }

    /// Reeb vector in stored coordinates.
    pub fn reeb(&self) -> DVector<f64> {
        self.to_ambient(self.reeb.clone())
    }

    /// `dH(R)` for an ambient gradient.
    pub fn reeb_derivative(&self, grad: &DVector<f64>) -> f64 {
        self.to_frame(grad).dot(&self.reeb)
    }

    /// Contact vector field of a Hamiltonian with value `h` and ambient gradient `grad`.
    pub fn field(&self, h: f64, grad: &DVector<f64>) -> DVector<f64> {
        self.field_and_reeb_derivative(h, grad).0
    }

    /// Field together with `dH(R)`, which drives the conformal factor.
    pub fn field_and_reeb_derivative(&self, h: f64, grad: &DVector<f64>) -> (DVector<f64>, f64) {
        let dh = self.to_frame(grad);
        let dhr = dh.dot(&self.reeb);
        let rhs = &self.a * (dhr + h) - dh;
        let y = self
            .lu
            .solve(&rhs)
            .unwrap_or_else(|| DVector::zeros(rhs.len()));
        (self.to_ambient(y), dhr)
    }

    /// Hamiltonian field on the symplectization `N × ℝ_{>0}` for `F(x, r)`
    /// with ambient `x`-gradient `dxf` and `∂_r F = f_r`.
    /// Returns the `N` component and `ṙ`.
    pub fn symplectization_field(
        &self,
        dxf: &DVector<f64>,
        f_r: f64,
        r: f64,
    ) -> (DVector<f64>, f64) {
        let d = self.to_frame(dxf);
        let dr = d.dot(&self.reeb);
        let rhs = (&self.a * dr - d) / r + &self.a * f_r;
        let y = self
            .lu
            .solve(&rhs)
            .unwrap_or_else(|| DVector::zeros(rhs.len()));
        (self.to_ambient(y), -dr)
    }
}

/// Reeb vector `R` at `x`: `α(R) = 1`, `ι_R dα = 0`.
pub fn solve_reeb(m: &ManifoldModel, x: &Point) -> Result<DVector<f64>> {
    m.check_point(x)?;
    Ok(ContactFrame::at(m, x)?.reeb())
}

/// Contact vector field `Y_t(x)` of `H`.
pub fn contact_field(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    t: f64,
    x: &Point,
) -> Result<DVector<f64>> {
    m.check_point(x)?;
    let frame = ContactFrame::at(m, x)?;
    let (v, g) = h.eval_grad(t, x);
    Ok(frame.field(v, &g))
}

/// Residuals `(|α(Y) − H|, ‖ι_Y dα + dH − dH(R)α‖)` of a candidate field, in frame coordinates.
pub fn field_residuals(
    m: &ManifoldModel,
    x: &Point,
    y: &DVector<f64>,
    h: f64,
    grad: &DVector<f64>,
) -> Result<(f64, f64)> {
    let f = m.frame(x);
    let (a, om) = m.frame_forms(x);
    let yf = if m.has_identity_frame() {
        y.clone()
    } else {
        f.transpose() * y
    };
    let dh = if m.has_identity_frame() {
        grad.clone()
    } else {
        f.transpose() * grad
    };
    let reeb = ContactFrame::at(m, x)?.reeb;
    let dhr = dh.dot(&reeb);
    let first = (a.dot(&yf) - h).abs();
    // (ι_Y dα)_j = Σ_i Y_i Ω_ij
    let iota = om.transpose() * &yf;
    let second = (iota + dh - a * dhr).norm();
    Ok((first, second))
}

/// Summary of the contact condition over random samples.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ContactConditionReport {
    pub manifold: String,
    pub samples: usize,
    pub seed: u64,
    pub min_density: f64,
    pub max_density: f64,
    pub pass: bool,
}

/// Samples `volume_density` at random points; passes iff the minimum is positive.
pub fn verify_contact_condition(
    m: &ManifoldModel,
    samples: usize,
    seed: u64,
) -> ContactConditionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_density = f64::INFINITY;
    let mut max_density = 0.0f64;
    for _ in 0..samples.max(1) {
        let x = m.random_point(&mut rng);
        let d = m.volume_density(&x);
        min_density = min_density.min(d);
        max_density = max_density.max(d);
    }
    ContactConditionReport {
        manifold: m.name().to_string(),
        samples: samples.max(1),
        seed,
        // round-off in the determinant of a singular form is not a density
        min_density: if min_density < 1e-12 {
            0.0
        } else {
            min_density
        },
        max_density,
        pass: min_density >= 1e-12,
    }
}

/// Result of checking the shipped minimal Reeb period.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReebPeriodCheck {
    pub rho: f64,
    /// Largest distance `|φ_R^ρ(x) − x|` over the sample.
    pub return_error: f64,
    /// Smallest distance `|φ_R^η(x) − x|` over sample points and `η ∈ [0.05ρ, 0.95ρ]`
    /// at points where the period is attained.
    pub min_early_gap: f64,
    pub pass: bool,
}

/// Integrates the closed-form Reeb flow and checks the first return at `ρ`.
/// The gap check runs at the given witness points, where an orbit of period
/// exactly `ρ` is expected.
pub fn verify_reeb_period(m: &ManifoldModel, witnesses: &[Point]) -> Option<ReebPeriodCheck> {
    let rho = m.rho()?.value;
    let mut return_error = 0.0f64;
    let mut min_early_gap = f64::INFINITY;
    for x in witnesses {
        let back = m.reeb_flow_closed_form(rho, x)?;
        return_error = return_error.max(m.distance(x, &back));
        for k in 1..20 {
            let eta = rho * (0.05 * k as f64);
            if eta > 0.95 * rho + 1e-12 {
                break;
            }
            let y = m.reeb_flow_closed_form(eta, x)?;
            min_early_gap = min_early_gap.min(m.distance(x, &y));
        }
    }
    Some(ReebPeriodCheck {
        rho,
        return_error,
        min_early_gap,
        pass: return_error < 1e-9 && min_early_gap > 1e-3,
    })
}
