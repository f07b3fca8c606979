//! Coefficient tables over a fixed basis of trigonometric and polynomial
//! monomials. These are the serializable building blocks for Hamiltonians
//! and for custom contact forms.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// One factor of a monomial. Trigonometric factors have period 1 in their
/// coordinate: `cos(2π k x)`, `sin(2π k x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Factor {
    Cos { coord: usize, k: i32 },
    Sin { coord: usize, k: i32 },
    Pow { coord: usize, p: u32 },
}

impl Factor {
    pub fn coord(&self) -> usize {
        match *self {
            Factor::Cos { coord, .. } | Factor::Sin { coord, .. } | Factor::Pow { coord, .. } => {
                coord
            }
        }
    }

    #[inline]
    fn value_and_derivative(&self, x: &[f64]) -> (f64, f64) {
        match *self {
            Factor::Cos { coord, k } => {
                let w = TAU * k as f64;
                let (s, c) = (w * x[coord]).sin_cos();
                (c, -w * s)
            }
            Factor::Sin { coord, k } => {
                let w = TAU * k as f64;
                let (s, c) = (w * x[coord]).sin_cos();
                (s, w * c)
            }
            Factor::Pow { coord, p } => {
                let v = x[coord];
                match p {
                    0 => (1.0, 0.0),
                    1 => (v, 1.0),
                    _ => (v.powi(p as i32), p as f64 * v.powi(p as i32 - 1)),
                }
            }
        }
    }
}

/// `coeff · t^time_power · Π factors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    #[serde(default)]
    pub time_power: u32,
    #[serde(default)]
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn new(coeff: f64, time_power: u32, factors: Vec<Factor>) -> Self {
        Self {
            coeff,
            time_power,
            factors,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, 0, Vec::new())
    }

    #[inline]
    pub fn time_coefficient(&self, t: f64) -> f64 {
        self.coeff * t.powi(self.time_power as i32)
    }

    /// Product of the spatial factors.
    #[inline]
    pub fn spatial(&self, x: &[f64]) -> f64 {
        self.factors
            .iter()
            .map(|f| f.value_and_derivative(x).0)
            .product()
    }

    /// Spatial product and its gradient, accumulated into `grad` with weight `w`.
    fn spatial_with_grad(&self, x: &[f64], w: f64, grad: &mut [f64]) -> f64 {
        let n = self.factors.len();
        let mut vals = [0.0; 8];
        let mut ders = [0.0; 8];
        if n > 8 {
            // Rare: long monomials take the slow path.
            let eps = 1e-6;
            let base = self.spatial(x);
            let mut xp = x.to_vec();
            for f in &self.factors {
                let c = f.coord();
                let h = eps * (1.0 + x[c].abs());
                xp[c] = x[c] + h;
                let up = self.spatial(&xp);
                xp[c] = x[c] - h;
                let dn = self.spatial(&xp);
                xp[c] = x[c];
                grad[c] += w * (up - dn) / (2.0 * h);
            }
            return base;
        }
        for (i, f) in self.factors.iter().enumerate() {
            let (v, d) = f.value_and_derivative(x);
            vals[i] = v;
            ders[i] = d;
        }
        let total: f64 = vals[..n].iter().product();
        for i in 0..n {
            let mut others = 1.0;
            for (j, v) in vals[..n].iter().enumerate() {
                if j != i {
                    others *= v;
                }
            }
            grad[self.factors[i].coord()] += w * ders[i] * others;
        }
        total
    }
}

/// A finite sum of [`Term`]s.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TermTable {
    pub terms: Vec<Term>,
}

impl TermTable {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![Term::constant(c)])
    }

    /// Largest coordinate index referenced, plus one.
    pub fn min_dimension(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter().map(|f| f.coord() + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|t| t.time_power == 0)
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|term| term.time_coefficient(t) * term.spatial(x))
            .sum()
    }

    /// Value and spatial gradient.
    pub fn eval_grad(&self, t: f64, x: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; x.len()];
        let mut value = 0.0;
        for term in &self.terms {
            let c = term.time_coefficient(t);
            if c == 0.0 {
                continue;
            }
            value += c * term.spatial_with_grad(x, c, &mut grad);
        }
        (value, grad)
    }

    /// Values of the individual spatial monomials, in term order.
    pub fn spatial_basis(&self, x: &[f64]) -> Vec<f64> {
        self.terms.iter().map(|t| t.spatial(x)).collect()
    }

    /// Time coefficients matching [`TermTable::spatial_basis`].
    pub fn time_coefficients(&self, t: f64) -> Vec<f64> {
        self.terms
            .iter()
            .map(|term| term.time_coefficient(t))
            .collect()
    }

    /// Partial derivative of a time-independent table along coordinate `i`,
    /// returned as a new table.
    pub fn partial(&self, i: usize) -> TermTable {
        let mut out = Vec::new();
        for term in &self.terms {
            for (j, f) in term.factors.iter().enumerate() {
                if f.coord() != i {
                    continue;
                }
                let (scale, replacement) = match *f {
                    Factor::Cos { coord, k } => (-TAU * k as f64, Some(Factor::Sin { coord, k })),
                    Factor::Sin { coord, k } => (TAU * k as f64, Some(Factor::Cos { coord, k })),
                    Factor::Pow { coord, p } => {
                        if p == 0 {
                            (0.0, None)
                        } else if p == 1 {
                            (1.0, None)
                        } else {
                            (p as f64, Some(Factor::Pow { coord, p: p - 1 }))
                        }
                    }
                };
                if scale == 0.0 {
                    continue;
                }
                let mut factors = term.factors.clone();
                match replacement {
                    Some(r) => factors[j] = r,
                    None => {
                        factors.remove(j);
                    }
                }
                out.push(Term::new(term.coeff * scale, term.time_power, factors));
            }
        }
        TermTable::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> TermTable {
        TermTable::new(vec![
            Term::new(
                0.7,
                1,
                vec![
                    Factor::Sin { coord: 0, k: 1 },
                    Factor::Cos { coord: 2, k: 2 },
                ],
            ),
            Term::new(-0.3, 2, vec![Factor::Pow { coord: 1, p: 3 }]),
            Term::constant(0.25),
        ])
    }

    #[test]
    fn gradient_matches_central_differences() {
        let table = sample_table();
        let x = [0.13, -0.4, 0.71];
        let t = 0.37;
        let (_, g) = table.eval_grad(t, &x);
        for i in 0..3 {
            let h = 1e-6;
            let mut xp = x;
            xp[i] += h;
            let mut xm = x;
            xm[i] -= h;
            let fd = (table.eval(t, &xp) - table.eval(t, &xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7, "coord {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn partial_derivative_table_agrees_with_gradient() {
        let table = TermTable::new(vec![
            Term::new(
                1.5,
                0,
                vec![
                    Factor::Sin { coord: 0, k: 1 },
                    Factor::Pow { coord: 1, p: 2 },
                ],
            ),
            Term::new(0.5, 0, vec![Factor::Cos { coord: 1, k: 3 }]),
        ]);
        let x = [0.2, 0.45];
        let (_, g) = table.eval_grad(0.0, &x);
        for (i, gi) in g.iter().enumerate() {
            let d = table.partial(i).eval(0.0, &x);
            assert!((d - gi).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_decomposition_reconstructs_value() {
        let table = sample_table();
        let x = [0.3, 0.1, -0.2];
        let t = 0.8;
        let b = table.spatial_basis(&x);
        let c = table.time_coefficients(t);
        let v: f64 = b.iter().zip(&c).map(|(b, c)| b * c).sum();
        assert!((v - table.eval(t, &x)).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let table = sample_table();
        let s = serde_json::to_string(&table).unwrap();
        let back: TermTable = serde_json::from_str(&s).unwrap();
        assert_eq!(table, back);
    }
}
