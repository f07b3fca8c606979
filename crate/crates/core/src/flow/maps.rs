//! Contactomorphisms as evaluable maps carrying their conformal factor.

use nalgebra::{DMatrix, DVector};
use std::fmt;

use super::isotopy::{
    flow_between, flow_with_variations, reeb_flow_tol, to_frame_covector, to_frame_jacobian,
};
use crate::error::Result;
use crate::geometry::{ManifoldModel, Point};
use crate::hamiltonian::{Constant, HamRef};

/// `Dψ(x)` and `dg_ψ(x)` in tangent-frame coordinates.
#[derive(Debug, Clone)]
pub struct MapDifferential {
    pub point: Point,
    pub g: f64,
    pub jacobian: DMatrix<f64>,
    pub dg: DVector<f64>,
}

/// A contactomorphism `ψ` with `ψ^*α = e^{g_ψ} α`.
pub trait ContactMap: Send + Sync + fmt::Debug {
    fn model(&self) -> &ManifoldModel;

    /// `(ψ(x), g_ψ(x))`.
    fn apply(&self, x: &Point) -> Result<(Point, f64)>;

    /// `(ψ⁻¹(y), g_{ψ⁻¹}(y))`.
    fn apply_inverse(&self, y: &Point) -> Result<(Point, f64)>;

    fn differential(&self, x: &Point) -> Result<MapDifferential>;

    fn is_strict(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub struct IdentityMap {
    pub model: ManifoldModel,
}

impl ContactMap for IdentityMap {
    fn model(&self) -> &ManifoldModel {
        &self.model
    }
    fn apply(&self, x: &Point) -> Result<(Point, f64)> {
        Ok((x.clone(), 0.0))
    }
    fn apply_inverse(&self, y: &Point) -> Result<(Point, f64)> {
        Ok((y.clone(), 0.0))
    }
    fn differential(&self, x: &Point) -> Result<MapDifferential> {
        let d = self.model.dim();
        Ok(MapDifferential {
            point: x.clone(),
            g: 0.0,
            jacobian: DMatrix::identity(d, d),
            dg: DVector::zeros(d),
        })
    }
    fn is_strict(&self) -> bool {
        true
    }
}

/// Reeb time-`η` map `φ_R^η`.
#[derive(Debug, Clone)]
pub struct ReebMap {
    pub model: ManifoldModel,
    pub eta: f64,
    pub tol: f64,
}

impl ReebMap {
    pub fn new(model: ManifoldModel, eta: f64) -> Self {
        Self {
            model,
            eta,
            tol: 1e-12,
        }
    }
}

impl ContactMap for ReebMap {
    fn model(&self) -> &ManifoldModel {
        &self.model
    }
    fn apply(&self, x: &Point) -> Result<(Point, f64)> {
        Ok((reeb_flow_tol(&self.model, self.eta, x, self.tol)?, 0.0))
    }
    fn apply_inverse(&self, y: &Point) -> Result<(Point, f64)> {
        Ok((reeb_flow_tol(&self.model, -self.eta, y, self.tol)?, 0.0))
    }
    fn differential(&self, x: &Point) -> Result<MapDifferential> {
        reeb_differential(&self.model, self.eta, x, self.tol)
    }
    fn is_strict(&self) -> bool {
        true
    }
}

/// `Dφ_R^η(x)` in frame coordinates.
pub fn reeb_differential(
    m: &ManifoldModel,
    eta: f64,
    x: &Point,
    tol: f64,
) -> Result<MapDifferential> {
    let d = m.dim();
    if m.reeb_flow_closed_form(eta, x).is_none() {
        let v = flow_with_variations(m, &Constant(1.0), x, 0.0, eta, tol)?;
        return Ok(MapDifferential {
            jacobian: to_frame_jacobian(m, x, &v.point, &v.jacobian),
            point: v.point,
            g: 0.0,
            dg: DVector::zeros(d),
        });
    }
    let center = reeb_flow_tol(m, eta, x, tol)?;
    let step = 1e-6;
    let mut jac = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut e = DVector::zeros(d);
        e[j] = step;
        let up = reeb_flow_tol(m, eta, &m.retract(x, &e), tol)?;
        let dn = reeb_flow_tol(m, eta, &m.retract(x, &(-e)), tol)?;
        jac.set_column(
            j,
            &((m.log(&center, &up) - m.log(&center, &dn)) / (2.0 * step)),
        );
    }
    Ok(MapDifferential {
        point: center,
        g: 0.0,
        jacobian: jac,
        dg: DVector::zeros(d),
    })
}

/// Time-`t_end` map `ψ_{t_end}` of a contact Hamiltonian.
#[derive(Debug, Clone)]
pub struct FlowMap {
    pub model: ManifoldModel,
    pub hamiltonian: HamRef,
    pub t_end: f64,
    pub tol: f64,
}

impl FlowMap {
    pub fn new(model: ManifoldModel, hamiltonian: HamRef, tol: f64) -> Self {
        Self {
            model,
            hamiltonian,
            t_end: 1.0,
            tol,
        }
    }

    pub fn at_time(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }
}

impl ContactMap for FlowMap {
    fn model(&self) -> &ManifoldModel {
        &self.model
    }
    fn apply(&self, x: &Point) -> Result<(Point, f64)> {
        let e = flow_between(
            &self.model,
            &*self.hamiltonian,
            x,
            0.0,
            self.t_end,
            self.tol,
        )?;
        Ok((e.point, e.g))
    }
    fn apply_inverse(&self, y: &Point) -> Result<(Point, f64)> {
        let e = flow_between(
            &self.model,
            &*self.hamiltonian,
            y,
            self.t_end,
            0.0,
            self.tol,
        )?;
        Ok((e.point, e.g))
    }
    fn differential(&self, x: &Point) -> Result<MapDifferential> {
        let m = &self.model;
        let v = flow_with_variations(m, &*self.hamiltonian, x, 0.0, self.t_end, self.tol)?;
        Ok(MapDifferential {
            jacobian: to_frame_jacobian(m, x, &v.point, &v.jacobian),
            dg: to_frame_covector(m, x, &v.grad_g),
            point: v.point,
            g: v.g,
        })
    }
    fn is_strict(&self) -> bool {
        self.hamiltonian.constant_value().is_some()
    }
}

/// `second ∘ first`, with `g = g_first + g_second ∘ first`.
#[derive(Debug, Clone)]
pub struct ComposedMap {
    pub first: std::sync::Arc<dyn ContactMap>,
    pub second: std::sync::Arc<dyn ContactMap>,
}

impl ContactMap for ComposedMap {
    fn model(&self) -> &ManifoldModel {
        self.first.model()
    }
    fn apply(&self, x: &Point) -> Result<(Point, f64)> {
        let (y, g1) = self.first.apply(x)?;
        let (z, g2) = self.second.apply(&y)?;
        Ok((z, g1 + g2))
    }
    fn apply_inverse(&self, z: &Point) -> Result<(Point, f64)> {
        let (y, g2) = self.second.apply_inverse(z)?;
        let (x, g1) = self.first.apply_inverse(&y)?;
        Ok((x, g1 + g2))
    }
    fn differential(&self, x: &Point) -> Result<MapDifferential> {
        let d1 = self.first.differential(x)?;
        let d2 = self.second.differential(&d1.point)?;
        Ok(MapDifferential {
            dg: &d1.dg + d1.jacobian.transpose() * &d2.dg,
            jacobian: &d2.jacobian * &d1.jacobian,
            point: d2.point,
            g: d1.g + d2.g,
        })
    }
    fn is_strict(&self) -> bool {
        self.first.is_strict() && self.second.is_strict()
    }
}
