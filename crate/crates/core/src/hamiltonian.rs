//! Time-dependent contact Hamiltonians `H: [0,1] × N → ℝ`.

use nalgebra::DVector;
use std::fmt;
use std::sync::Arc;

use crate::geometry::Point;
use crate::terms::TermTable;

/// A time-dependent scalar field on `[0,1] × N`.
///
/// Points are given in the stored coordinates of the manifold model; the
/// gradient is taken with respect to those coordinates.
pub trait TimeHamiltonian: Send + Sync + fmt::Debug {
    fn eval(&self, t: f64, x: &Point) -> f64;

    /// Value and gradient. Falls back to central differences with step
    /// `1e-5·(1+‖x‖)`; analytic implementations override this.
    fn eval_grad(&self, t: f64, x: &Point) -> (f64, DVector<f64>) {
        (self.eval(t, x), fd_gradient(|y| self.eval(t, y), x))
    }

    fn has_analytic_gradient(&self) -> bool {
        false
    }

    fn is_autonomous(&self) -> bool {
        false
    }

    /// `Some(c)` when `H ≡ c`.
    fn constant_value(&self) -> Option<f64> {
        None
    }

    /// Length of a separable decomposition `H(t,x) = Σ_k c_k(t) φ_k(x)`, if any.
    fn basis_len(&self) -> Option<usize> {
        None
    }

    /// Writes `φ_k(x)`; only called when [`TimeHamiltonian::basis_len`] is `Some`.
    fn basis(&self, _x: &Point, _out: &mut [f64]) {}

    /// Writes `c_k(t)`; only called when [`TimeHamiltonian::basis_len`] is `Some`.
    fn coefficients(&self, _t: f64, _out: &mut [f64]) {}
}

pub type HamRef = Arc<dyn TimeHamiltonian>;

/// Central-difference gradient with step `1e-5·(1+‖x‖)`.
pub fn fd_gradient<F: Fn(&Point) -> f64>(f: F, x: &Point) -> DVector<f64> {
    let h = 1e-5 * (1.0 + x.norm());
    let mut y = x.clone();
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let dn = f(&y);
            y[i] = x[i];
            (up - dn) / (2.0 * h)
        }),
    )
}

/// `H ≡ c`.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl TimeHamiltonian for Constant {
    fn eval(&self, _t: f64, _x: &Point) -> f64 {
        self.0
    }
    fn eval_grad(&self, _t: f64, x: &Point) -> (f64, DVector<f64>) {
        (self.0, DVector::zeros(x.len()))
    }
    fn has_analytic_gradient(&self) -> bool {
        true
    }
    fn is_autonomous(&self) -> bool {
        true
    }
    fn constant_value(&self) -> Option<f64> {
        Some(self.0)
    }
    fn basis_len(&self) -> Option<usize> {
        Some(1)
    }
    fn basis(&self, _x: &Point, out: &mut [f64]) {
        out[0] = 1.0;
    }
    fn coefficients(&self, _t: f64, out: &mut [f64]) {
        out[0] = self.0;
    }
}

/// Coefficient-table Hamiltonian with analytic gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct TableHamiltonian {
    pub table: TermTable,
}

impl TableHamiltonian {
    pub fn new(table: TermTable) -> Self {
        Self { table }
    }
}

impl TimeHamiltonian for TableHamiltonian {
    fn eval(&self, t: f64, x: &Point) -> f64 {
        self.table.eval(t, x.as_slice())
    }
    fn eval_grad(&self, t: f64, x: &Point) -> (f64, DVector<f64>) {
        let (v, g) = self.table.eval_grad(t, x.as_slice());
        (v, DVector::from_vec(g))
    }
    fn has_analytic_gradient(&self) -> bool {
        true
    }
    fn is_autonomous(&self) -> bool {
        self.table.is_time_independent()
    }
    fn constant_value(&self) -> Option<f64> {
        self.table
            .terms
            .iter()
            .all(|t| t.factors.is_empty() && (t.time_power == 0 || t.coeff == 0.0))
            .then(|| self.table.terms.iter().map(|t| t.coeff).sum())
    }
    fn basis_len(&self) -> Option<usize> {
        Some(self.table.terms.len())
    }
    fn basis(&self, x: &Point, out: &mut [f64]) {
        for (o, term) in out.iter_mut().zip(&self.table.terms) {
            *o = term.spatial(x.as_slice());
        }
    }
    fn coefficients(&self, t: f64, out: &mut [f64]) {
        for (o, term) in out.iter_mut().zip(&self.table.terms) {
            *o = term.time_coefficient(t);
        }
    }
}

type ScalarFn = dyn Fn(f64, &Point) -> f64 + Send + Sync;
type GradFn = dyn Fn(f64, &Point) -> DVector<f64> + Send + Sync;

/// Closure-backed Hamiltonian, mostly for tests and examples.
pub struct FnHamiltonian {
    label: String,
    f: Box<ScalarFn>,
    grad: Option<Box<GradFn>>,
    autonomous: bool,
}

impl FnHamiltonian {
    pub fn new(label: &str, f: impl Fn(f64, &Point) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.to_string(),
            f: Box::new(f),
            grad: None,
            autonomous: false,
        }
    }

    pub fn with_gradient(
        mut self,
        g: impl Fn(f64, &Point) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Box::new(g));
        self
    }

    pub fn autonomous(mut self) -> Self {
        self.autonomous = true;
        self
    }
}

impl fmt::Debug for FnHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnHamiltonian({})", self.label)
    }
}

impl TimeHamiltonian for FnHamiltonian {
    fn eval(&self, t: f64, x: &Point) -> f64 {
        (self.f)(t, x)
    }
    fn eval_grad(&self, t: f64, x: &Point) -> (f64, DVector<f64>) {
        match &self.grad {
            Some(g) => ((self.f)(t, x), g(t, x)),
            None => (self.eval(t, x), fd_gradient(|y| (self.f)(t, y), x)),
        }
    }
    fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }
    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

/// `s · H`.
#[derive(Debug, Clone)]
pub struct Scaled {
    pub factor: f64,
    pub inner: HamRef,
}

impl TimeHamiltonian for Scaled {
    fn eval(&self, t: f64, x: &Point) -> f64 {
        self.factor * self.inner.eval(t, x)
    }
    fn eval_grad(&self, t: f64, x: &Point) -> (f64, DVector<f64>) {
        let (v, g) = self.inner.eval_grad(t, x);
        (self.factor * v, g * self.factor)
    }
    fn has_analytic_gradient(&self) -> bool {
        self.inner.has_analytic_gradient()
    }
    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }
    fn constant_value(&self) -> Option<f64> {
        self.inner.constant_value().map(|c| c * self.factor)
    }
    fn basis_len(&self) -> Option<usize> {
        self.inner.basis_len()
    }
    fn basis(&self, x: &Point, out: &mut [f64]) {
        self.inner.basis(x, out)
    }
    fn coefficients(&self, t: f64, out: &mut [f64]) {
        self.inner.coefficients(t, out);
        for c in out.iter_mut() {
            *c *= self.factor;
        }
    }
}

/// `Σ wᵢ Hᵢ`.
#[derive(Debug, Clone)]
pub struct Sum {
    pub parts: Vec<(f64, HamRef)>,
}

impl Sum {
    fn basis_lens(&self) -> Option<Vec<usize>> {
        self.parts.iter().map(|(_, h)| h.basis_len()).collect()
    }
}

impl TimeHamiltonian for Sum {
    fn eval(&self, t: f64, x: &Point) -> f64 {
        self.parts.iter().map(|(w, h)| w * h.eval(t, x)).sum()
    }
    fn eval_grad(&self, t: f64, x: &Point) -> (f64, DVector<f64>) {
        let mut v = 0.0;
        let mut g = DVector::zeros(x.len());
        for (w, h) in &self.parts {
            let (hv, hg) = h.eval_grad(t, x);
            v += w * hv;
            g.axpy(*w, &hg, 1.0);
        }
        (v, g)
    }
    fn has_analytic_gradient(&self) -> bool {
        self.parts.iter().all(|(_, h)| h.has_analytic_gradient())
    }
    fn is_autonomous(&self) -> bool {
        self.parts.iter().all(|(_, h)| h.is_autonomous())
    }
    fn constant_value(&self) -> Option<f64> {
        self.parts
            .iter()
            .map(|(w, h)| h.constant_value().map(|c| w * c))
            .sum()
    }
    fn basis_len(&self) -> Option<usize> {
        self.basis_lens().map(|l| l.iter().sum())
    }
    fn basis(&self, x: &Point, out: &mut [f64]) {
        let mut off = 0;
        for (_, h) in &self.parts {
            let n = h.basis_len().unwrap_or(0);
            h.basis(x, &mut out[off..off + n]);
            off += n;
        }
    }
    fn coefficients(&self, t: f64, out: &mut [f64]) {
        let mut off = 0;
        for (w, h) in &self.parts {
            let n = h.basis_len().unwrap_or(0);
            h.coefficients(t, &mut out[off..off + n]);
            for c in &mut out[off..off + n] {
                *c *= w;
            }
            off += n;
        }
    }
}

/// Pointwise product `A · B`.
#[derive(Debug, Clone)]
pub struct Product {
    pub a: HamRef,
    pub b: HamRef,
}

impl TimeHamiltonian for Product {
    fn eval(&self, t: f64, x: &Point) -> f64 {
        self.a.eval(t, x) * self.b.eval(t, x)
    }
    fn eval_grad(&self, t: f64, x: &Point) -> (f64, DVector<f64>) {
        let (av, ag) = self.a.eval_grad(t, x);
        let (bv, bg) = self.b.eval_grad(t, x);
        (av * bv, ag * bv + bg * av)
    }
    fn has_analytic_gradient(&self) -> bool {
        self.a.has_analytic_gradient() && self.b.has_analytic_gradient()
    }
    fn is_autonomous(&self) -> bool {
        self.a.is_autonomous() && self.b.is_autonomous()
    }
    fn constant_value(&self) -> Option<f64> {
        Some(self.a.constant_value()? * self.b.constant_value()?)
    }
    fn basis_len(&self) -> Option<usize> {
        Some(self.a.basis_len()? * self.b.basis_len()?)
    }
    fn basis(&self, x: &Point, out: &mut [f64]) {
        let (na, nb) = (
            self.a.basis_len().unwrap_or(0),
            self.b.basis_len().unwrap_or(0),
        );
        let mut ba = vec![0.0; na];
        let mut bb = vec![0.0; nb];
        self.a.basis(x, &mut ba);
        self.b.basis(x, &mut bb);
        for i in 0..na {
            for j in 0..nb {
                out[i * nb + j] = ba[i] * bb[j];
            }
        }
    }
    fn coefficients(&self, t: f64, out: &mut [f64]) {
        let (na, nb) = (
            self.a.basis_len().unwrap_or(0),
            self.b.basis_len().unwrap_or(0),
        );
        let mut ca = vec![0.0; na];
        let mut cb = vec![0.0; nb];
        self.a.coefficients(t, &mut ca);
        self.b.coefficients(t, &mut cb);
        for i in 0..na {
            for j in 0..nb {
                out[i * nb + j] = ca[i] * cb[j];
            }
        }
    }
}

/// `(t, x) ↦ −H(1−t, x)`, generating `ψ_{1−t} ψ₁⁻¹`.
#[derive(Debug, Clone)]
pub struct Inverted {
    pub inner: HamRef,
}

impl TimeHamiltonian for Inverted {
    fn eval(&self, t: f64, x: &Point) -> f64 {
        -self.inner.eval(1.0 - t, x)
    }
    fn eval_grad(&self, t: f64, x: &Point) -> (f64, DVector<f64>) {
        let (v, g) = self.inner.eval_grad(1.0 - t, x);
        (-v, -g)
    }
    fn has_analytic_gradient(&self) -> bool {
        self.inner.has_analytic_gradient()
    }
    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }
    fn constant_value(&self) -> Option<f64> {
        self.inner.constant_value().map(|c| -c)
    }
    fn basis_len(&self) -> Option<usize> {
        self.inner.basis_len()
    }
    fn basis(&self, x: &Point, out: &mut [f64]) {
        self.inner.basis(x, out)
    }
    fn coefficients(&self, t: f64, out: &mut [f64]) {
        self.inner.coefficients(1.0 - t, out);
        for c in out.iter_mut() {
            *c = -*c;
        }
    }
}

/// `(t, x) ↦ H(t, x) − b(t)`, with `b` tabulated and linearly interpolated.
#[derive(Debug, Clone)]
pub struct TimeShifted {
    pub inner: HamRef,
    pub times: Vec<f64>,
    pub shift: Vec<f64>,
}

impl TimeShifted {
    pub fn shift_at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if n == 0 {
            return 0.0;
        }
        if t <= self.times[0] {
            return self.shift[0];
        }
        if t >= self.times[n - 1] {
            return self.shift[n - 1];
        }
        let k = self.times.partition_point(|s| *s <= t).min(n - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let u = (t - t0) / (t1 - t0);
        self.shift[k - 1] * (1.0 - u) + self.shift[k] * u
    }
}

impl TimeHamiltonian for TimeShifted {
    fn eval(&self, t: f64, x: &Point) -> f64 {
        self.inner.eval(t, x) - self.shift_at(t)
    }
    fn eval_grad(&self, t: f64, x: &Point) -> (f64, DVector<f64>) {
        let (v, g) = self.inner.eval_grad(t, x);
        (v - self.shift_at(t), g)
    }
    fn has_analytic_gradient(&self) -> bool {
        self.inner.has_analytic_gradient()
    }
    fn basis_len(&self) -> Option<usize> {
        self.inner.basis_len().map(|n| n + 1)
    }
    fn basis(&self, x: &Point, out: &mut [f64]) {
        let n = out.len() - 1;
        self.inner.basis(x, &mut out[..n]);
        out[n] = 1.0;
    }
    fn coefficients(&self, t: f64, out: &mut [f64]) {
        let n = out.len() - 1;
        self.inner.coefficients(t, &mut out[..n]);
        out[n] = -self.shift_at(t);
    }
}

/// Convenience constructors.
pub fn constant(c: f64) -> HamRef {
    Arc::new(Constant(c))
}

pub fn table(t: TermTable) -> HamRef {
    Arc::new(TableHamiltonian::new(t))
}

pub fn scaled(factor: f64, inner: HamRef) -> HamRef {
    Arc::new(Scaled { factor, inner })
}

pub fn invert(inner: HamRef) -> HamRef {
    Arc::new(Inverted { inner })
}

pub fn product(a: HamRef, b: HamRef) -> HamRef {
    Arc::new(Product { a, b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{Factor, Term};

    fn sample() -> HamRef {
        table(TermTable::new(vec![
            Term::new(0.5, 1, vec![Factor::Sin { coord: 2, k: 1 }]),
            Term::new(
                0.2,
                0,
                vec![
                    Factor::Cos { coord: 0, k: 1 },
                    Factor::Pow { coord: 1, p: 2 },
                ],
            ),
        ]))
    }

    fn check_basis(h: &HamRef, t: f64, x: &Point) {
        let n = h.basis_len().expect("separable");
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        h.basis(x, &mut b);
        h.coefficients(t, &mut c);
        let v: f64 = b.iter().zip(&c).map(|(b, c)| b * c).sum();
        assert!((v - h.eval(t, x)).abs() < 1e-14, "{h:?}");
    }

    #[test]
    fn separable_decompositions_reconstruct() {
        let x = DVector::from_vec(vec![0.1, 0.7, 0.3]);
        let h = sample();
        check_basis(&h, 0.4, &x);
        check_basis(&invert(h.clone()), 0.4, &x);
        check_basis(&scaled(-1.5, h.clone()), 0.4, &x);
        check_basis(&product(h.clone(), constant(2.0)), 0.4, &x);
        let s: HamRef = Arc::new(Sum {
            parts: vec![(1.0, h.clone()), (-2.0, constant(0.3))],
        });
        check_basis(&s, 0.9, &x);
        let ts: HamRef = Arc::new(TimeShifted {
            inner: h,
            times: vec![0.0, 1.0],
            shift: vec![0.0, 2.0],
        });
        check_basis(&ts, 0.25, &x);
    }

    #[test]
    fn analytic_gradient_matches_fd() {
        let h = sample();
        let x = DVector::from_vec(vec![0.1, 0.7, 0.3]);
        let (_, g) = h.eval_grad(0.6, &x);
        let fd = fd_gradient(|y| h.eval(0.6, y), &x);
        assert!((g - fd).norm() < 1e-8);
    }

    #[test]
    fn inverted_is_time_reversed_negation() {
        let h = sample();
        let x = DVector::from_vec(vec![0.3, 0.2, 0.1]);
        let inv = invert(h.clone());
        assert_eq!(inv.eval(0.25, &x), -h.eval(0.75, &x));
        assert_eq!(invert(constant(1.5)).constant_value(), Some(-1.5));
    }

    #[test]
    fn time_shift_interpolates() {
        let ts = TimeShifted {
            inner: constant(0.0),
            times: vec![0.0, 0.5, 1.0],
            shift: vec![0.0, 1.0, 3.0],
        };
        assert!((ts.shift_at(0.25) - 0.5).abs() < 1e-15);
        assert!((ts.shift_at(0.75) - 2.0).abs() < 1e-15);
        assert!((ts.shift_at(1.0) - 3.0).abs() < 1e-15);
    }
}
