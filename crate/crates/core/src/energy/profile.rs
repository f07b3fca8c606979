//! Spatial extrema of `H_t` on a time grid: uniform spatial grid, local
//! Newton ascent from the best grid candidates, and a Lipschitz error bound.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ContactError, Result};
use crate::geometry::{ManifoldModel, Point, SpatialGrid};
use crate::hamiltonian::TimeHamiltonian;

/// Quadrature settings shared by all path energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySettings {
    /// Composite Simpson nodes on `[0, 1]`; must be odd.
    pub time_nodes: usize,
    pub grid_per_dim: usize,
    /// Newton ascent iterations per candidate.
    pub refinements: usize,
    /// Distinct grid candidates refined per extremum.
    pub candidates: usize,
}

impl Default for EnergySettings {
    fn default() -> Self {
        Self {
            time_nodes: 129,
            grid_per_dim: 64,
            refinements: 10,
            candidates: 4,
        }
    }
}

impl EnergySettings {
    pub fn with_grid(mut self, per_dim: usize) -> Self {
        self.grid_per_dim = per_dim;
        self
    }

    pub fn with_time_nodes(mut self, n: usize) -> Self {
        self.time_nodes = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_nodes < 3 || self.time_nodes.is_multiple_of(2) {
            return Err(ContactError::Config(format!(
                "time_nodes must be odd and at least 3, got {}",
                self.time_nodes
            )));
        }
        if self.grid_per_dim < 2 {
            return Err(ContactError::Config(
                "grid_per_dim must be at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.time_nodes;
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    pub fn simpson_weights(&self) -> Vec<f64> {
        simpson_weights(self.time_nodes)
    }
}

pub fn simpson_weights(n: usize) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect()
}

/// Spatial statistics of `H_t` at one time node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeProfile {
    pub t: f64,
    pub max: f64,
    pub min: f64,
    pub maxabs: f64,
    /// Volume-weighted mean over `N`.
    pub mean: f64,
    /// Lipschitz bound on how far the sampled extrema can sit from the true ones.
    pub spatial_err: f64,
    pub argmax: Vec<f64>,
    pub argmin: Vec<f64>,
}

impl NodeProfile {
    pub fn osc(&self) -> f64 {
        self.max - self.min
    }
}

/// Node profiles of a Hamiltonian on the time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeProfile {
    pub nodes: Vec<NodeProfile>,
    pub settings: EnergySettings,
    pub grid_points: usize,
    pub cell_radius: f64,
}

impl TimeProfile {
    pub fn integrate<F: Fn(&NodeProfile) -> f64>(&self, f: F) -> f64 {
        let w = simpson_weights(self.nodes.len());
        self.nodes.iter().zip(&w).map(|(n, w)| w * f(n)).sum()
    }

    fn integrate_trapezoid<F: Fn(&NodeProfile) -> f64>(&self, f: F) -> f64 {
        let w = trapezoid_weights(self.nodes.len());
        self.nodes.iter().zip(&w).map(|(n, w)| w * f(n)).sum()
    }

    /// `∫ |H_t|_∞ dt`.
    pub fn linf(&self) -> f64 {
        self.integrate(|n| n.maxabs)
    }

    /// `∫ osc(H_t) dt`.
    pub fn osc(&self) -> f64 {
        self.integrate(|n| n.osc())
    }

    pub fn integral_max(&self) -> f64 {
        self.integrate(|n| n.max)
    }

    pub fn integral_min(&self) -> f64 {
        self.integrate(|n| n.min)
    }

    pub fn integral_mean(&self) -> f64 {
        self.integrate(|n| n.mean)
    }

    /// `Σ w·spatial_err + |Simpson − trapezoid|` for the given integrand.
    pub fn quadrature_bound<F: Fn(&NodeProfile) -> f64 + Copy>(
        &self,
        f: F,
        spatial_multiplier: f64,
    ) -> f64 {
        let spatial = self.integrate(|n| n.spatial_err) * spatial_multiplier;
        spatial + (self.integrate(f) - self.integrate_trapezoid(f)).abs()
    }

    pub fn linf_bound(&self) -> f64 {
        self.quadrature_bound(|n| n.maxabs, 1.0)
    }

    pub fn times(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.t).collect()
    }
}

/// Evaluator for `x ↦ H(t, x)` that may reuse a precomputed separable basis.
struct Evaluator<'a> {
    h: &'a dyn TimeHamiltonian,
    basis_len: Option<usize>,
}

impl<'a> Evaluator<'a> {
    fn coeffs(&self, t: f64) -> Option<Vec<f64>> {
        self.basis_len.map(|k| {
            let mut c = vec![0.0; k];
            self.h.coefficients(t, &mut c);
            c
        })
    }

    fn value(&self, t: f64, coeffs: &Option<Vec<f64>>, x: &Point) -> f64 {
        match coeffs {
            Some(c) => {
                let mut b = vec![0.0; c.len()];
                self.h.basis(x, &mut b);
                b.iter().zip(c).map(|(b, c)| b * c).sum()
            }
            None => self.h.eval(t, x),
        }
    }
}

/// Neighbor pairs on the tensor grid with their inverse distances.
fn neighbor_pairs(m: &ManifoldModel, grid: &SpatialGrid) -> Vec<(u32, u32, f64)> {
    let d = m.dim();
    let n = grid.per_dim;
    let total = grid.points.len();
    let periodic: Vec<bool> = (0..d)
        .map(|k| {
            // parameter direction k is periodic on S³ for k > 0
            if m.is_constrained() {
                k > 0
            } else {
                m.chart()[k].periodic
            }
        })
        .collect();
    let mut pairs = Vec::with_capacity(total * d);
    for i in 0..total {
        let mut rem = i;
        let mut idx = vec![0usize; d];
        for k in (0..d).rev() {
            idx[k] = rem % n;
            rem /= n;
        }
        for k in 0..d {
            let stride = n.pow((d - 1 - k) as u32);
            let j = if idx[k] + 1 < n {
                i + stride
            } else if periodic[k] {
                i + stride - n * stride
            } else {
                continue;
            };
            let dist = m.distance(&grid.points[i], &grid.points[j]);
            if dist > 1e-14 {
                pairs.push((i as u32, j as u32, 1.0 / dist));
            }
        }
    }
    pairs
}

/// Maximizes `f` near `x0` by damped Newton ascent in retraction coordinates.
pub fn refine_maximum<F: Fn(&Point) -> f64>(
    m: &ManifoldModel,
    f: F,
    x0: &Point,
    f0: f64,
    iterations: usize,
    radius: f64,
) -> (Point, f64) {
    let d = m.dim();
    let clamp = |x: Point| {
        if m.is_constrained() {
            x
        } else {
            m.clamp_to_chart(&x)
        }
    };
    let mut x = x0.clone();
    let mut fx = f0;
    let mut trust = radius.max(1e-6);
    let h = (radius * 0.05).clamp(1e-6, 1e-4);
    for _ in 0..iterations {
        let at = |v: &DVector<f64>| f(&clamp(m.retract(&x, v)));
        let mut g = DVector::zeros(d);
        let mut hess = DMatrix::zeros(d, d);
        let mut e = DVector::zeros(d);
        for i in 0..d {
            e[i] = h;
            let up = at(&e);
            e[i] = -h;
            let dn = at(&e);
            e[i] = 0.0;
            g[i] = (up - dn) / (2.0 * h);
            hess[(i, i)] = (up - 2.0 * fx + dn) / (h * h);
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let mut v = DVector::zeros(d);
                let mut q = 0.0;
                for (si, sj, w) in [
                    (1.0, 1.0, 1.0),
                    (1.0, -1.0, -1.0),
                    (-1.0, 1.0, -1.0),
                    (-1.0, -1.0, 1.0),
                ] {
                    v[i] = si * h;
                    v[j] = sj * h;
                    q += w * at(&v);
                }
                let hij = q / (4.0 * h * h);
                hess[(i, j)] = hij;
                hess[(j, i)] = hij;
            }
        }
        if !g.iter().all(|v| v.is_finite()) || g.norm() == 0.0 {
            break;
        }
        // Newton step on −Hess with eigenvalues floored to keep it a descent
        // direction for −f in flat or convex directions.
        let eig = (-hess).symmetric_eigen();
        let top = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let floor = 1e-8 * top + 1e-12;
        let coef = eig.eigenvectors.transpose() * &g;
        let scaled = DVector::from_iterator(
            d,
            coef.iter()
                .zip(eig.eigenvalues.iter())
                .map(|(c, l)| c / l.abs().max(floor)),
        );
        let mut step = &eig.eigenvectors * scaled;
        if step.norm() > trust {
            step *= trust / step.norm();
        }
        let mut accepted = false;
        for _ in 0..30 {
            let cand = clamp(m.retract(&x, &step));
            let fc = f(&cand);
            if fc > fx {
                x = cand;
                fx = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step.norm() < 1e-12 {
            break;
        }
        trust = (2.0 * step.norm()).max(h);
    }
    (x, fx)
}

/// Indices of up to `k` best values (largest `sign·v`), pairwise further apart than `sep`.
fn top_candidates(
    m: &ManifoldModel,
    grid: &SpatialGrid,
    values: &[f64],
    sign: f64,
    k: usize,
    sep: f64,
) -> Vec<usize> {
    let pool = (16 * k).max(32).min(values.len());
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let key = |i: &usize| -sign * values[*i];
    if pool < idx.len() {
        idx.select_nth_unstable_by(pool - 1, |a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
        idx.truncate(pool);
    }
    idx.sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for i in idx {
        if chosen.len() >= k {
            break;
        }
        if chosen
            .iter()
            .all(|&j| m.distance(&grid.points[i], &grid.points[j]) > sep)
        {
            chosen.push(i);
        }
    }
    chosen
}

/// Profiles `H` at every time node of `settings`.
pub fn time_profile(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    settings: &EnergySettings,
) -> Result<TimeProfile> {
    settings.validate()?;
    let grid = m.spatial_grid(settings.grid_per_dim);
    time_profile_on(m, h, settings, &grid)
}

pub fn time_profile_on(
    m: &ManifoldModel,
    h: &dyn TimeHamiltonian,
    settings: &EnergySettings,
    grid: &SpatialGrid,
) -> Result<TimeProfile> {
    settings.validate()?;
    let eval = Evaluator {
        h,
        basis_len: h.basis_len(),
    };
    let basis: Option<Vec<Vec<f64>>> = eval.basis_len.map(|k| {
        grid.points
            .par_iter()
            .map(|p| {
                let mut b = vec![0.0; k];
                h.basis(p, &mut b);
                b
            })
            .collect()
    });
    let pairs = neighbor_pairs(m, grid);
    let total_w = grid.total_weight();
    let times = settings.times();
    let constant = h.constant_value();

    let nodes: Vec<Result<NodeProfile>> = times
        .par_iter()
        .map(|&t| {
            if let Some(c) = constant {
                let p = grid.points[0].as_slice().to_vec();
                return Ok(NodeProfile {
                    t,
                    max: c,
                    min: c,
                    maxabs: c.abs(),
                    mean: c,
                    spatial_err: 0.0,
                    argmax: p.clone(),
                    argmin: p,
                });
            }
            let coeffs = eval.coeffs(t);
            let values: Vec<f64> = match (&basis, &coeffs) {
                (Some(b), Some(c)) => b
                    .iter()
                    .map(|row| row.iter().zip(c).map(|(b, c)| b * c).sum())
                    .collect(),
                _ => grid.points.iter().map(|p| h.eval(t, p)).collect(),
            };
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(ContactError::NonFinite(format!(
                    "H({t}, {:?})",
                    grid.points[i].as_slice()
                )));
            }
            let lip = pairs
                .iter()
                .map(|&(i, j, inv)| (values[i as usize] - values[j as usize]).abs() * inv)
                .fold(0.0, f64::max);
            let mean = values
                .iter()
                .zip(&grid.weights)
                .map(|(v, w)| v * w)
                .sum::<f64>()
                / total_w;
            let f = |x: &Point| eval.value(t, &coeffs, x);
            let sep = 3.0 * grid.cell_radius;
            let mut best = [
                (f64::NEG_INFINITY, grid.points[0].clone()),
                (f64::NEG_INFINITY, grid.points[0].clone()),
            ];
            for (slot, sign) in [(0usize, 1.0f64), (1, -1.0)] {
                for i in top_candidates(m, grid, &values, sign, settings.candidates.max(1), sep) {
                    let (x, v) = if settings.refinements > 0 {
                        refine_maximum(
                            m,
                            |x| sign * f(x),
                            &grid.points[i],
                            sign * values[i],
                            settings.refinements,
                            2.0 * grid.cell_radius,
                        )
                    } else {
                        (grid.points[i].clone(), sign * values[i])
                    };
                    if v > best[slot].0 {
                        best[slot] = (v, x);
                    }
                }
            }
            let max = best[0].0;
            let min = -best[1].0;
            Ok(NodeProfile {
                t,
                max,
                min,
                maxabs: max.abs().max(min.abs()),
                mean,
                spatial_err: lip * grid.cell_radius,
                argmax: best[0].1.as_slice().to_vec(),
                argmin: best[1].1.as_slice().to_vec(),
            })
        })
        .collect();
    let nodes = nodes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(TimeProfile {
        nodes,
        settings: *settings,
        grid_points: grid.points.len(),
        cell_radius: grid.cell_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{constant, table};
    use crate::terms::{Factor, Term, TermTable};

    #[test]
    fn simpson_integrates_cubic_exactly() {
        let w = simpson_weights(9);
        let s: f64 = w
            .iter()
            .enumerate()
            .map(|(i, w)| w * (i as f64 / 8.0).powi(3))
            .sum();
        assert!((s - 0.25).abs() < 1e-15);
    }

    #[test]
    fn even_time_nodes_rejected() {
        assert!(EnergySettings::default()
            .with_time_nodes(10)
            .validate()
            .is_err());
    }

    #[test]
    fn refinement_finds_off_grid_maximum() {
        let m = ManifoldModel::torus3();
        let h = table(TermTable::new(vec![Term::new(
            1.0,
            0,
            vec![Factor::Cos { coord: 0, k: 1 }],
        )]));
        // shift the maximum off the grid
        let f = |x: &Point| h.eval(0.0, &Point::from_vec(vec![x[0] - 0.013, x[1], x[2]]));
        let start = Point::from_vec(vec![0.0, 0.0, 0.0]);
        let (x, v) = refine_maximum(&m, f, &start, f(&start), 10, 0.05);
        assert!((v - 1.0).abs() < 1e-12, "{v}");
        assert!((x[0] - 0.013).abs() < 1e-6);
    }

    #[test]
    fn constant_profile_is_flat() {
        let m = ManifoldModel::sphere3();
        let p = time_profile(
            &m,
            &*constant(-1.5),
            &EnergySettings::default().with_grid(4),
        )
        .unwrap();
        assert!((p.linf() - 1.5).abs() < 1e-14);
        assert!(p.osc().abs() < 1e-15);
    }
}
