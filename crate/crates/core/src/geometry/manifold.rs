use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{ContactError, Result};
use crate::terms::TermTable;

/// A point of `N` in the coordinates of its model (chart coordinates, or
/// ambient `ℝ⁴` coordinates for the sphere).
pub type Point = DVector<f64>;

/// One coordinate range of a chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordRange {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub periodic: bool,
}

impl CoordRange {
    pub const fn periodic(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: true,
        }
    }

    pub const fn interval(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: false,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Signed shortest difference `b - a` respecting periodicity.
    #[inline]
    pub fn diff(&self, a: f64, b: f64) -> f64 {
        let d = b - a;
        if self.periodic {
            let w = self.width();
            d - w * (d / w).round()
        } else {
            d
        }
    }

    #[inline]
    pub fn wrap(&self, v: f64) -> f64 {
        if self.periodic {
            let w = self.width();
            let r = self.lo + (v - self.lo).rem_euclid(w);
            // rem_euclid may return exactly w for tiny negative inputs
            if r >= self.hi {
                self.lo
            } else {
                r
            }
        } else {
            v
        }
    }

    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        if self.periodic {
            v
        } else {
            v.clamp(self.lo, self.hi)
        }
    }
}

/// Minimal Reeb period together with a note on where the value comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReebPeriod {
    pub value: f64,
    pub source: String,
}

/// Coefficient tables describing a custom contact form on a chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomManifoldSpec {
    pub name: String,
    pub chart: Vec<CoordRange>,
    /// One table per coordinate: `α = Σ αᵢ(x) dxᵢ`.
    pub alpha: Vec<TermTable>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub betti_z2: Option<usize>,
    #[serde(default)]
    pub closed: bool,
}

#[derive(Debug, Clone)]
pub(crate) enum FormKind {
    Circle,
    Torus3,
    Sphere3,
    Heisenberg,
    Table {
        alpha: Vec<TermTable>,
        /// `partials[i][j] = ∂ᵢ αⱼ`
        partials: Vec<Vec<TermTable>>,
    },
}

/// A concrete contact manifold with a global contact form.
#[derive(Debug, Clone)]
pub struct ManifoldModel {
    pub(crate) name: String,
    pub(crate) kind: FormKind,
    pub(crate) chart: Vec<CoordRange>,
    pub(crate) rho: Option<ReebPeriod>,
    pub(crate) betti_z2: Option<usize>,
    pub(crate) closed: bool,
}

/// Quadrature grid over `N`: points with weights for the measure `α∧(dα)ⁿ`.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Upper bound on the distance from any point of `N` to the grid.
    pub cell_radius: f64,
    pub per_dim: usize,
}

impl SpatialGrid {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

impl ManifoldModel {
    /// `S¹ = ℝ/ℤ` with `α = dθ`.
    pub fn circle() -> Self {
        Self {
            name: "CircleS1".into(),
            kind: FormKind::Circle,
            chart: vec![CoordRange::periodic(0.0, 1.0)],
            rho: Some(ReebPeriod {
                value: 1.0,
                source: "α = dθ on ℝ/ℤ: the Reeb flow is unit-speed rotation, first return at 1"
                    .into(),
            }),
            betti_z2: Some(2),
            closed: true,
        }
    }

    /// `T³ = (ℝ/ℤ)³` with `α = cos(2πz)dx + sin(2πz)dy`.
    pub fn torus3() -> Self {
        Self {
            name: "Torus3".into(),
            kind: FormKind::Torus3,
            chart: vec![CoordRange::periodic(0.0, 1.0); 3],
            rho: Some(ReebPeriod {
                value: 1.0,
                source: "Reeb orbits are lines of direction (cos 2πz, sin 2πz); a closed orbit of period T needs T·(cos, sin) ∈ ℤ²∖0, so T ≥ 1 with equality at z = 0".into(),
            }),
            betti_z2: Some(8),
            closed: true,
        }
    }

    /// Unit sphere in `ℝ⁴ = ℂ²` with `α = x₁dy₁ − y₁dx₁ + x₂dy₂ − y₂dx₂`.
    /// Coordinates are ambient `(x₁, y₁, x₂, y₂)`.
    pub fn sphere3() -> Self {
        Self {
            name: "SphereS3".into(),
            kind: FormKind::Sphere3,
            chart: vec![CoordRange::interval(-1.0, 1.0); 4],
            rho: Some(ReebPeriod {
                value: TAU,
                source: "Reeb flow is z ↦ e^{iη}z (Hopf action), every orbit has period 2π".into(),
            }),
            betti_z2: Some(2),
            closed: true,
        }
    }

    /// Local chart `(x, y, θ)` with `α = dθ + x dy` on `[-1, 1]³`.
    pub fn heisenberg() -> Self {
        Self::heisenberg_with_box([CoordRange::interval(-1.0, 1.0); 3])
    }

    pub fn heisenberg_with_box(chart: [CoordRange; 3]) -> Self {
        Self {
            name: "HeisenbergChart".into(),
            kind: FormKind::Heisenberg,
            chart: chart.to_vec(),
            rho: None,
            betti_z2: None,
            closed: false,
        }
    }

    pub fn from_custom(spec: CustomManifoldSpec) -> Result<Self> {
        let n = spec.chart.len();
        if n == 0 || n.is_multiple_of(2) {
            return Err(ContactError::Config(format!(
                "custom manifold '{}': chart dimension must be odd, got {n}",
                spec.name
            )));
        }
        if spec.alpha.len() != n {
            return Err(ContactError::Config(format!(
                "custom manifold '{}': alpha needs {n} component tables, got {}",
                spec.name,
                spec.alpha.len()
            )));
        }
        for (i, c) in spec.chart.iter().enumerate() {
            if !(c.hi > c.lo) {
                return Err(ContactError::Config(format!(
                    "custom manifold '{}': chart coordinate {i} has empty range",
                    spec.name
                )));
            }
        }
        if let Some(bad) = spec.alpha.iter().find(|t| t.min_dimension() > n) {
            return Err(ContactError::Config(format!(
                "custom manifold '{}': alpha table references coordinate {} beyond dimension {n}",
                spec.name,
                bad.min_dimension() - 1
            )));
        }
        let partials = (0..n)
            .map(|i| spec.alpha.iter().map(|a| a.partial(i)).collect())
            .collect();
        Ok(Self {
            name: spec.name.clone(),
            kind: FormKind::Table {
                alpha: spec.alpha,
                partials,
            },
            chart: spec.chart,
            rho: spec.rho.map(|value| ReebPeriod {
                value,
                source: "declared in custom manifold description".into(),
            }),
            betti_z2: spec.betti_z2,
            closed: spec.closed,
        })
    }

    /// Look up one of the catalog manifolds by name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "CircleS1" | "circle" | "S1" => Ok(Self::circle()),
            "Torus3" | "torus" | "T3" => Ok(Self::torus3()),
            "SphereS3" | "sphere" | "S3" => Ok(Self::sphere3()),
            "HeisenbergChart" | "heisenberg" => Ok(Self::heisenberg()),
            other => Err(ContactError::UnknownManifold(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Intrinsic dimension `2n + 1`.
    pub fn dim(&self) -> usize {
        match self.kind {
            FormKind::Sphere3 => 3,
            _ => self.chart.len(),
        }
    }

    /// `n` in `dim = 2n + 1`.
    pub fn half_dim(&self) -> usize {
        (self.dim() - 1) / 2
    }

    /// Number of coordinates used to store a point.
    pub fn ambient_dim(&self) -> usize {
        self.chart.len()
    }

    pub fn chart(&self) -> &[CoordRange] {
        &self.chart
    }

    pub fn rho(&self) -> Option<&ReebPeriod> {
        self.rho.as_ref()
    }

    pub fn betti_z2_total(&self) -> Option<usize> {
        self.betti_z2
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_constrained(&self) -> bool {
        matches!(self.kind, FormKind::Sphere3)
    }

    /// Coefficients of `α` in the stored coordinates.
    pub fn alpha(&self, x: &Point) -> DVector<f64> {
        match &self.kind {
            FormKind::Circle => DVector::from_element(1, 1.0),
            FormKind::Torus3 => {
                let (s, c) = (TAU * x[2]).sin_cos();
                DVector::from_vec(vec![c, s, 0.0])
            }
            FormKind::Sphere3 => DVector::from_vec(vec![-x[1], x[0], -x[3], x[2]]),
            FormKind::Heisenberg => DVector::from_vec(vec![0.0, x[0], 1.0]),
            FormKind::Table { alpha, .. } => {
                DVector::from_iterator(alpha.len(), alpha.iter().map(|a| a.eval(0.0, x.as_slice())))
            }
        }
    }

    /// `Ω` with `Ω_ij = dα(e_i, e_j)`.
    pub fn dalpha(&self, x: &Point) -> DMatrix<f64> {
        let m = self.ambient_dim();
        let mut om = DMatrix::zeros(m, m);
        match &self.kind {
            FormKind::Circle => {}
            FormKind::Torus3 => {
                let (s, c) = (TAU * x[2]).sin_cos();
                om[(0, 2)] = TAU * s;
                om[(2, 0)] = -TAU * s;
                om[(1, 2)] = -TAU * c;
                om[(2, 1)] = TAU * c;
            }
            FormKind::Sphere3 => {
                om[(0, 1)] = 2.0;
                om[(1, 0)] = -2.0;
                om[(2, 3)] = 2.0;
                om[(3, 2)] = -2.0;
            }
            FormKind::Heisenberg => {
                om[(0, 1)] = 1.0;
                om[(1, 0)] = -1.0;
            }
            FormKind::Table { partials, .. } => {
                for i in 0..m {
                    for j in (i + 1)..m {
                        let v = partials[i][j].eval(0.0, x.as_slice())
                            - partials[j][i].eval(0.0, x.as_slice());
                        om[(i, j)] = v;
                        om[(j, i)] = -v;
                    }
                }
            }
        }
        om
    }

    pub fn has_identity_frame(&self) -> bool {
        !self.is_constrained()
    }

    /// Basis of `T_x N` in stored coordinates, as columns (`ambient × dim`).
    /// Identity for chart models; the quaternionic frame `(ix, jx, kx)` on `S³`.
    pub fn frame(&self, x: &Point) -> DMatrix<f64> {
        match self.kind {
            FormKind::Sphere3 => {
                let (x1, y1, x2, y2) = (x[0], x[1], x[2], x[3]);
                DMatrix::from_column_slice(
                    4,
                    3,
                    &[-y1, x1, -y2, x2, -x2, y2, x1, -y1, -y2, -x2, y1, x1],
                )
            }
            _ => DMatrix::identity(self.ambient_dim(), self.ambient_dim()),
        }
    }

    /// Closed-form Reeb field where the catalog knows it.
    pub fn reeb_closed_form(&self, x: &Point) -> Option<DVector<f64>> {
        match self.kind {
            FormKind::Circle => Some(DVector::from_element(1, 1.0)),
            FormKind::Torus3 => {
                let (s, c) = (TAU * x[2]).sin_cos();
                Some(DVector::from_vec(vec![c, s, 0.0]))
            }
            FormKind::Sphere3 => Some(DVector::from_vec(vec![-x[1], x[0], -x[3], x[2]])),
            FormKind::Heisenberg => Some(DVector::from_vec(vec![0.0, 0.0, 1.0])),
            FormKind::Table { .. } => None,
        }
    }

    /// Closed-form Reeb flow `φ_R^η(x)` where available.
    pub fn reeb_flow_closed_form(&self, eta: f64, x: &Point) -> Option<Point> {
        match self.kind {
            FormKind::Circle => Some(self.wrap(&DVector::from_element(1, x[0] + eta))),
            FormKind::Torus3 => {
                let (s, c) = (TAU * x[2]).sin_cos();
                Some(self.wrap(&DVector::from_vec(vec![
                    x[0] + eta * c,
                    x[1] + eta * s,
                    x[2],
                ])))
            }
            FormKind::Sphere3 => {
                let (s, c) = eta.sin_cos();
                Some(DVector::from_vec(vec![
                    c * x[0] - s * x[1],
                    s * x[0] + c * x[1],
                    c * x[2] - s * x[3],
                    s * x[2] + c * x[3],
                ]))
            }
            FormKind::Heisenberg => Some(DVector::from_vec(vec![x[0], x[1], x[2] + eta])),
            FormKind::Table { .. } => None,
        }
    }

    /// Density of `α∧(dα)ⁿ` against the frame volume (chart Lebesgue measure,
    /// or Riemannian volume on `S³`), in absolute value.
    pub fn volume_density(&self, x: &Point) -> f64 {
        let (a, om) = self.frame_forms(x);
        let d = a.len();
        let mut m = DMatrix::zeros(d + 1, d + 1);
        for i in 0..d {
            m[(0, i + 1)] = a[i];
            m[(i + 1, 0)] = -a[i];
            for j in 0..d {
                m[(i + 1, j + 1)] = om[(i, j)];
            }
        }
        let n = self.half_dim();
        let factorial: f64 = (1..=n).map(|k| k as f64).product();
        factorial * m.determinant().abs().sqrt()
    }

    /// `α` and `dα` expressed in the tangent frame at `x`.
    pub fn frame_forms(&self, x: &Point) -> (DVector<f64>, DMatrix<f64>) {
        let a = self.alpha(x);
        let om = self.dalpha(x);
        if self.has_identity_frame() {
            (a, om)
        } else {
            let f = self.frame(x);
            let fa = f.transpose() * a;
            let fo = f.transpose() * om * &f;
            (fa, fo)
        }
    }

    /// Removes drift off a constraint surface; returns the size of the correction.
    pub fn project(&self, x: &mut [f64]) -> f64 {
        if self.is_constrained() {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in x.iter_mut() {
                    *v /= norm;
                }
            }
            (norm - 1.0).abs()
        } else {
            0.0
        }
    }

    /// Reduces periodic coordinates into their fundamental domain.
    pub fn wrap(&self, x: &Point) -> Point {
        DVector::from_iterator(x.len(), x.iter().zip(&self.chart).map(|(v, c)| c.wrap(*v)))
    }

    pub fn clamp_to_chart(&self, x: &Point) -> Point {
        DVector::from_iterator(x.len(), x.iter().zip(&self.chart).map(|(v, c)| c.clamp(*v)))
    }

    /// Coordinates of `y` relative to `x` in the tangent frame at `x`:
    /// wrapped chart difference, or the frame projection of `y − x` on `S³`.
    pub fn log(&self, x: &Point, y: &Point) -> DVector<f64> {
        if self.is_constrained() {
            self.frame(x).transpose() * (y - x)
        } else {
            DVector::from_iterator(
                x.len(),
                self.chart
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.diff(x[i], y[i])),
            )
        }
    }

    /// Move from `x` along the frame vector `v` and return to the model.
    pub fn retract(&self, x: &Point, v: &DVector<f64>) -> Point {
        if self.is_constrained() {
            let mut y = x + self.frame(x) * v;
            self.project(y.as_mut_slice());
            y
        } else {
            x + v
        }
    }

    /// Chart distance respecting periodicity (ambient distance on `S³`).
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        if self.is_constrained() {
            (y - x).norm()
        } else {
            self.chart
                .iter()
                .enumerate()
                .map(|(i, c)| c.diff(x[i], y[i]).powi(2))
                .sum::<f64>()
                .sqrt()
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        if x.len() != self.ambient_dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        if self.is_constrained() {
            return (x.norm() - 1.0).abs() < 1e-6;
        }
        x.iter()
            .zip(&self.chart)
            .all(|(v, c)| c.periodic || (*v >= c.lo - 1e-12 && *v <= c.hi + 1e-12))
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(ContactError::OutsideChart(format!(
                "{:?} not in {}",
                x.as_slice(),
                self.name
            )))
        }
    }

    /// Map from the unit cube `[0, 1]^dim` onto `N`: affine on charts, Hopf
    /// coordinates on `S³`.
    pub fn param_point(&self, u: &[f64]) -> Point {
        match self.kind {
            FormKind::Sphere3 => {
                let eta = FRAC_PI_2 * u[0];
                let (xi1, xi2) = (TAU * u[1], TAU * u[2]);
                let (se, ce) = eta.sin_cos();
                DVector::from_vec(vec![
                    ce * xi1.cos(),
                    ce * xi1.sin(),
                    se * xi2.cos(),
                    se * xi2.sin(),
                ])
            }
            _ => DVector::from_iterator(
                self.ambient_dim(),
                self.chart.iter().zip(u).map(|(c, u)| c.lo + u * c.width()),
            ),
        }
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self.kind {
            FormKind::Sphere3 => {
                // Normalized Gaussian vector: uniform on S³.
                loop {
                    let v: Vec<f64> = (0..4)
                        .map(|_| {
                            // Box–Muller
                            let u1: f64 = rng.gen_range(1e-300..1.0);
                            let u2: f64 = rng.gen();
                            (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
                        })
                        .collect();
                    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    if n > 1e-6 {
                        return DVector::from_iterator(4, v.into_iter().map(|a| a / n));
                    }
                }
            }
            _ => DVector::from_iterator(
                self.ambient_dim(),
                self.chart.iter().map(|c| {
                    if c.periodic {
                        c.lo + rng.gen::<f64>() * c.width()
                    } else {
                        rng.gen_range(c.lo..=c.hi)
                    }
                }),
            ),
        }
    }

    /// Uniform quadrature grid with `per_dim` nodes per parameter direction.
    /// Periodic directions use the rectangle rule, bounded ones the trapezoid
    /// rule with endpoints. Weights integrate against `α∧(dα)ⁿ`.
    pub fn spatial_grid(&self, per_dim: usize) -> SpatialGrid {
        let per_dim = per_dim.max(2);
        let d = self.dim();
        // (nodes in [0,1], weights summing to 1) per parameter direction
        let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..d)
            .map(|i| {
                if self.param_periodic(i) {
                    let nodes = (0..per_dim).map(|k| k as f64 / per_dim as f64).collect();
                    (nodes, vec![1.0 / per_dim as f64; per_dim])
                } else {
                    let h = 1.0 / (per_dim - 1) as f64;
                    let nodes = (0..per_dim).map(|k| k as f64 * h).collect();
                    let mut w = vec![h; per_dim];
                    w[0] = 0.5 * h;
                    w[per_dim - 1] = 0.5 * h;
                    (nodes, w)
                }
            })
            .collect();
        let total = per_dim.pow(d as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        let mut u = vec![0.0; d];
        for _ in 0..total {
            let mut w = 1.0;
            for k in 0..d {
                u[k] = axes[k].0[idx[k]];
                w *= axes[k].1[idx[k]];
            }
            let p = self.param_point(&u);
            w *= self.param_jacobian(&u) * self.volume_density(&p);
            points.push(p);
            weights.push(w);
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < per_dim {
                    break;
                }
                idx[k] = 0;
            }
        }
        let cell_radius = 0.5
            * (0..d)
                .map(|i| {
                    let h = if self.param_periodic(i) {
                        1.0 / per_dim as f64
                    } else {
                        1.0 / (per_dim - 1) as f64
                    };
                    (h * self.param_scale(i)).powi(2)
                })
                .sum::<f64>()
                .sqrt();
        SpatialGrid {
            points,
            weights,
            cell_radius,
            per_dim,
        }
    }

    fn param_periodic(&self, i: usize) -> bool {
        match self.kind {
            FormKind::Sphere3 => i > 0,
            _ => self.chart[i].periodic,
        }
    }

    /// Largest metric stretch of parameter direction `i`.
    fn param_scale(&self, i: usize) -> f64 {
        match self.kind {
            FormKind::Sphere3 => {
                if i == 0 {
                    FRAC_PI_2
                } else {
                    TAU
                }
            }
            _ => self.chart[i].width(),
        }
    }

    /// Volume factor of `param_point` (frame volume per unit parameter volume).
    fn param_jacobian(&self, u: &[f64]) -> f64 {
        match self.kind {
            FormKind::Sphere3 => {
                let eta = FRAC_PI_2 * u[0];
                FRAC_PI_2 * TAU * TAU * eta.sin() * eta.cos()
            }
            _ => self.chart.iter().map(|c| c.width()).product(),
        }
    }

    /// Closed-form `vol(N, α∧(dα)ⁿ)` where known, otherwise a grid estimate.
    pub fn total_volume(&self) -> f64 {
        match self.kind {
            FormKind::Circle => 1.0,
            FormKind::Torus3 => TAU,
            FormKind::Sphere3 => 4.0 * PI * PI,
            FormKind::Heisenberg => self.chart.iter().map(|c| c.width()).product(),
            FormKind::Table { .. } => self.spatial_grid(32).total_weight(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_difference_wraps() {
        let c = CoordRange::periodic(0.0, 1.0);
        assert!((c.diff(0.95, 0.05) - 0.1).abs() < 1e-15);
        assert!((c.diff(0.05, 0.95) + 0.1).abs() < 1e-15);
        assert!((c.wrap(-0.25) - 0.75).abs() < 1e-15);
        assert!((c.wrap(2.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sphere_frame_is_orthonormal_and_tangent() {
        let m = ManifoldModel::sphere3();
        let x = m.param_point(&[0.3, 0.2, 0.7]);
        let f = m.frame(&x);
        let g = f.transpose() * &f;
        assert!((g - DMatrix::identity(3, 3)).norm() < 1e-14);
        assert!((f.transpose() * &x).norm() < 1e-14);
    }

    #[test]
    fn grid_weights_integrate_volume() {
        for (m, expect) in [
            (ManifoldModel::circle(), 1.0),
            (ManifoldModel::torus3(), TAU),
            (ManifoldModel::sphere3(), 4.0 * PI * PI),
        ] {
            let g = m.spatial_grid(24);
            let rel = (g.total_weight() - expect).abs() / expect;
            assert!(rel < 2e-3, "{}: {} vs {expect}", m.name(), g.total_weight());
        }
    }

    #[test]
    fn volume_density_values() {
        let t = ManifoldModel::torus3();
        let x = DVector::from_vec(vec![0.1, 0.2, 0.33]);
        assert!((t.volume_density(&x) - TAU).abs() < 1e-12);
        let s = ManifoldModel::sphere3();
        let p = s.param_point(&[0.4, 0.1, 0.9]);
        assert!((s.volume_density(&p) - 2.0).abs() < 1e-12);
        let h = ManifoldModel::heisenberg();
        assert!((h.volume_density(&DVector::from_vec(vec![0.5, 0.1, 0.2])) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn custom_spec_validation() {
        let bad = CustomManifoldSpec {
            name: "even".into(),
            chart: vec![CoordRange::periodic(0.0, 1.0); 2],
            alpha: vec![TermTable::constant(1.0); 2],
            rho: None,
            betti_z2: None,
            closed: true,
        };
        assert!(ManifoldModel::from_custom(bad).is_err());
    }
}
