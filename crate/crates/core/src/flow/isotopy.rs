//! Contact isotopies: trajectories, conformal factors and their linearization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::integrator::{Dopri5, IntegratorStats};
use crate::error::Result;
use crate::geometry::{ContactFrame, ManifoldModel, Point};
use crate::hamiltonian::{Constant, TimeHamiltonian};

/// Number of uniform output intervals in a trace.
pub const TRACE_INTERVALS: usize = 64;

/// A sampled trajectory `t ↦ ψ_t(x₀)` with transported `g_t = log λ_{ψ_t}(x₀)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsotopyTrace {
    pub x0: Vec<f64>,
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub logconf: Vec<f64>,
    pub stats: IntegratorStats,
}

impl IsotopyTrace {
    pub fn endpoint(&self) -> Point {
        Point::from_column_slice(self.points.last().expect("non-empty trace"))
    }

    pub fn final_logconf(&self) -> f64 {
        *self.logconf.last().expect("non-empty trace")
    }

    /// CSV with columns `t, x0, x1, …, g`.
    pub fn to_csv(&self) -> String {
        let dim = self.x0.len();
        let mut s = String::from("t");
        for i in 0..dim {
            s.push_str(&format!(",x{i}"));
        }
        s.push_str(",g\n");
        for ((t, p), g) in self.times.iter().zip(&self.points).zip(&self.logconf) {
            s.push_str(&format!("{t:.17e}"));
            for v in p {
                s.push_str(&format!(",{v:.17e}"));
            }
            s.push_str(&format!(",{g:.17e}\n"));
        }
        s
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "x0": self.x0,
            "endpoint": self.points.last(),
            "final_logconf": self.logconf.last(),
            "samples": self.times.len(),
            "stats": self.stats,
        })
    }
}

/// Endpoint of a flow segment.
#[derive(Debug, Clone)]
pub struct FlowEnd {
    pub point: Point,
    /// Accumulated `∫ dH(R) dt` along the segment.
    pub g: f64,
    pub stats: IntegratorStats,
}

/// Endpoint together with the linearized flow in stored coordinates.
#[derive(Debug, Clone)]
pub struct VariationalEnd {
    pub point: Point,
    pub g: f64,
    /// `∂ψ/∂x` in stored coordinates.
    pub jacobian: DMatrix<f64>,
    /// Gradient of the accumulated `g` with respect to the start point.
    pub grad_g: DVector<f64>,
    pub stats: IntegratorStats,
}

fn basic_rhs(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    t: f64,
    y: &[f64],
    dy: &mut [f64],
) -> Result<()> {
    let n = m.ambient_dim();
    let x = Point::from_column_slice(&y[..n]);
    let frame = ContactFrame::at(m, &x)?;
    let (v, g) = h.eval_grad(t, &x);
    let (field, dhr) = frame.field_and_reeb_derivative(v, &g);
    dy[..n].copy_from_slice(field.as_slice());
    dy[n] = dhr;
    Ok(())
}

fn projector<'a>(m: &'a ManifoldModel) -> impl FnMut(&mut [f64]) -> f64 + 'a {
    let n = m.ambient_dim();
    move |y: &mut [f64]| m.project(&mut y[..n])
}

/// Samples `ψ_t(x₀)` and `g_t` at `TRACE_INTERVALS + 1` uniform times on `[0, 1]`.
pub fn integrate_isotopy(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    x0: &Point,
    tol: f64,
) -> Result<IsotopyTrace> {
    integrate_isotopy_sampled(m, h, x0, tol, TRACE_INTERVALS)
}

pub fn integrate_isotopy_sampled(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    x0: &Point,
    tol: f64,
    intervals: usize,
) -> Result<IsotopyTrace> {
    m.check_point(x0)?;
    let n = m.ambient_dim();
    let times: Vec<f64> = (0..=intervals)
        .map(|i| i as f64 / intervals as f64)
        .collect();
    let mut y0 = x0.as_slice().to_vec();
    y0.push(0.0);
    let mut stats = IntegratorStats::default();
    let states = Dopri5::new(tol).integrate(
        |t, y, dy| basic_rhs(m, h, t, y, dy),
        &y0,
        0.0,
        &times[1..],
        projector(m),
        &mut stats,
    )?;
    let mut points = vec![m.wrap(x0).as_slice().to_vec()];
    let mut logconf = vec![0.0];
    for s in states {
        points.push(
            m.wrap(&Point::from_column_slice(&s[..n]))
                .as_slice()
                .to_vec(),
        );
        logconf.push(s[n]);
    }
    Ok(IsotopyTrace {
        x0: x0.as_slice().to_vec(),
        times,
        points,
        logconf,
        stats,
    })
}

/// Flows `x` from `t_from` to `t_to` (either direction) along `H`.
pub fn flow_between(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    x: &Point,
    t_from: f64,
    t_to: f64,
    tol: f64,
) -> Result<FlowEnd> {
    let n = m.ambient_dim();
    if let Some(c) = h.constant_value() {
        if let Some(p) = m.reeb_flow_closed_form(c * (t_to - t_from), x) {
            return Ok(FlowEnd {
                point: p,
                g: 0.0,
                stats: IntegratorStats::default(),
            });
        }
    }
    let mut y0 = x.as_slice().to_vec();
    y0.push(0.0);
    let mut stats = IntegratorStats::default();
    let out = Dopri5::new(tol).integrate(
        |t, y, dy| basic_rhs(m, h, t, y, dy),
        &y0,
        t_from,
        &[t_to],
        projector(m),
        &mut stats,
    )?;
    let s = &out[0];
    Ok(FlowEnd {
        point: m.wrap(&Point::from_column_slice(&s[..n])),
        g: s[n],
        stats,
    })
}

/// Field and `dH(R)` at an arbitrary ambient point.
fn field_at(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    t: f64,
    x: &Point,
) -> Result<(DVector<f64>, f64)> {
    let frame = ContactFrame::at(m, x)?;
    let (v, g) = h.eval_grad(t, x);
    Ok(frame.field_and_reeb_derivative(v, &g))
}

fn variational_rhs(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    t: f64,
    y: &[f64],
    dy: &mut [f64],
) -> Result<()> {
    let n = m.ambient_dim();
    let x = Point::from_column_slice(&y[..n]);
    let (v, s) = field_at(m, h, t, &x)?;
    dy[..n].copy_from_slice(v.as_slice());
    dy[n] = s;
    // Central differences of the field and of s = dH(R).
    let step = 1e-5 * (1.0 + x.norm());
    let mut dv = DMatrix::zeros(n, n);
    let mut ds = DVector::zeros(n);
    let mut xp = x.clone();
    for j in 0..n {
        xp[j] = x[j] + step;
        let (vp, sp) = field_at(m, h, t, &xp)?;
        xp[j] = x[j] - step;
        let (vm, sm) = field_at(m, h, t, &xp)?;
        xp[j] = x[j];
        dv.set_column(j, &((vp - vm) / (2.0 * step)));
        ds[j] = (sp - sm) / (2.0 * step);
    }
    let phi = DMatrix::from_column_slice(n, n, &y[n + 1..n + 1 + n * n]);
    let dphi = &dv * &phi;
    dy[n + 1..n + 1 + n * n].copy_from_slice(dphi.as_slice());
    let dq = phi.transpose() * ds;
    dy[n + 1 + n * n..].copy_from_slice(dq.as_slice());
    Ok(())
}

/// Flow from `t_from` to `t_to` with the co-integrated variational equations
/// `Φ' = DY·Φ` and `q' = Φᵀ∇(dH(R))`.
pub fn flow_with_variations(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    x: &Point,
    t_from: f64,
    t_to: f64,
    tol: f64,
) -> Result<VariationalEnd> {
    let n = m.ambient_dim();
    let mut y0 = x.as_slice().to_vec();
    y0.push(0.0);
    y0.extend(DMatrix::<f64>::identity(n, n).as_slice());
    y0.extend(std::iter::repeat_n(0.0, n));
    let mut stats = IntegratorStats::default();
    let out = Dopri5::new(tol).integrate(
        |t, y, dy| variational_rhs(m, h, t, y, dy),
        &y0,
        t_from,
        &[t_to],
        projector(m),
        &mut stats,
    )?;
    let s = &out[0];
    Ok(VariationalEnd {
        point: m.wrap(&Point::from_column_slice(&s[..n])),
        g: s[n],
        jacobian: DMatrix::from_column_slice(n, n, &s[n + 1..n + 1 + n * n]),
        grad_g: DVector::from_column_slice(&s[n + 1 + n * n..]),
        stats,
    })
}

/// Reeb flow `φ_R^η(x)`: closed form where the model has one, otherwise the
/// flow of `H ≡ 1` for time `η`.
pub fn reeb_flow(m: &ManifoldModel, eta: f64, x: &Point) -> Result<Point> {
    reeb_flow_tol(m, eta, x, 1e-12)
}

pub fn reeb_flow_tol(m: &ManifoldModel, eta: f64, x: &Point, tol: f64) -> Result<Point> {
    m.check_point(x)?;
    if eta == 0.0 {
        return Ok(x.clone());
    }
    if let Some(p) = m.reeb_flow_closed_form(eta, x) {
        return Ok(p);
    }
    Ok(flow_between(m, &Constant(1.0), x, 0.0, eta, tol)?.point)
}

/// Converts an ambient Jacobian at `x ↦ y` into tangent-frame coordinates.
pub fn to_frame_jacobian(
    m: &ManifoldModel,
    x: &Point,
    y: &Point,
    j: &DMatrix<f64>,
) -> DMatrix<f64> {
    if m.has_identity_frame() {
        j.clone()
    } else {
        m.frame(y).transpose() * j * m.frame(x)
    }
}

pub fn to_frame_covector(m: &ManifoldModel, x: &Point, c: &DVector<f64>) -> DVector<f64> {
    if m.has_identity_frame() {
        c.clone()
    } else {
        m.frame(x).transpose() * c
    }
}

/// `Dψ₁(x₀)` in tangent-frame coordinates, from the variational equations.
pub fn monodromy(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    x0: &Point,
    tol: f64,
) -> Result<DMatrix<f64>> {
    m.check_point(x0)?;
    let v = flow_with_variations(m, h, x0, 0.0, 1.0, tol)?;
    Ok(to_frame_jacobian(m, x0, &v.point, &v.jacobian))
}

/// Central-difference cross-check of [`monodromy`] (step `1e-5`).
pub fn monodromy_fd(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    x0: &Point,
    tol: f64,
) -> Result<DMatrix<f64>> {
    m.check_point(x0)?;
    let d = m.dim();
    let step = 1e-5;
    let center = flow_between(m, h, x0, 0.0, 1.0, tol)?.point;
    let mut jac = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut e = DVector::zeros(d);
        e[j] = step;
        let up = flow_between(m, h, &m.retract(x0, &e), 0.0, 1.0, tol)?.point;
        let dn = flow_between(m, h, &m.retract(x0, &(-e)), 0.0, 1.0, tol)?.point;
        let col = (m.log(&center, &up) - m.log(&center, &dn)) / (2.0 * step);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// `(ψ^*α)(v)` and `e^g α(v)` for a frame vector `v` at `x`.
pub fn pullback_pair(
    m: &ManifoldModel,
    x: &Point,
    y: &Point,
    ambient_jacobian: &DMatrix<f64>,
    g: f64,
    v: &DVector<f64>,
) -> (f64, f64) {
    let va = if m.has_identity_frame() {
        v.clone()
    } else {
        m.frame(x) * v
    };
    let pushed = ambient_jacobian * &va;
    (m.alpha(y).dot(&pushed), g.exp() * m.alpha(x).dot(&va))
}

/// Largest `|(ψ_t^*α)(v) − e^{g_t} α(v)|` over frame basis vectors `v` at
/// `checkpoints` uniform times in `(0, 1]`.
pub fn pullback_residual_along(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    x0: &Point,
    checkpoints: usize,
    tol: f64,
) -> Result<f64> {
    m.check_point(x0)?;
    let d = m.dim();
    let mut worst = 0.0f64;
    for k in 1..=checkpoints.max(1) {
        let t = k as f64 / checkpoints.max(1) as f64;
        let v = flow_with_variations(m, h, x0, 0.0, t, tol)?;
        for j in 0..d {
            let mut e = DVector::zeros(d);
            e[j] = 1.0;
            let (lhs, rhs) = pullback_pair(m, x0, &v.point, &v.jacobian, v.g, &e);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}
