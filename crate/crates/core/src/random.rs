//! Seeded generators of coefficient-table Hamiltonians.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::ManifoldModel;
use crate::terms::{Factor, Term, TermTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub terms: usize,
    /// Bound on `Σ|coeff|`, hence on `|H|`.
    pub amplitude: f64,
    pub max_freq: i32,
    pub time_degree: u32,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            terms: 4,
            amplitude: 0.5,
            max_freq: 2,
            time_degree: 1,
        }
    }
}

fn factor_for<R: Rng + ?Sized>(
    m: &ManifoldModel,
    coord: usize,
    rng: &mut R,
    max_freq: i32,
) -> Factor {
    let periodic = !m.is_constrained() && m.chart()[coord].periodic;
    if periodic {
        let k = rng.gen_range(1..=max_freq.max(1));
        if rng.gen_bool(0.5) {
            Factor::Cos { coord, k }
        } else {
            Factor::Sin { coord, k }
        }
    } else {
        Factor::Pow {
            coord,
            p: rng.gen_range(1..=2),
        }
    }
}

fn coefficients<R: Rng + ?Sized>(n: usize, amplitude: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let total: f64 = raw.iter().map(|c: &f64| c.abs()).sum::<f64>().max(1e-12);
    raw.into_iter().map(|c| c * amplitude / total).collect()
}

/// Sum of `spec.terms` monomials in one or two coordinates with time powers up
/// to `spec.time_degree`.
pub fn random_table<R: Rng + ?Sized>(
    m: &ManifoldModel,
    spec: &RandomSpec,
    rng: &mut R,
) -> TermTable {
    let n = m.ambient_dim();
    let coeffs = coefficients(spec.terms.max(1), spec.amplitude, rng);
    let terms = coeffs
        .into_iter()
        .map(|c| {
            let nf = if n > 1 { rng.gen_range(1..=2) } else { 1 };
            let mut factors = Vec::with_capacity(nf);
            let first = rng.gen_range(0..n);
            factors.push(factor_for(m, first, rng, spec.max_freq));
            if nf == 2 {
                let second = (first + rng.gen_range(1..n)) % n;
                factors.push(factor_for(m, second, rng, spec.max_freq));
            }
            Term::new(c, rng.gen_range(0..=spec.time_degree), factors)
        })
        .collect();
    TermTable::new(terms)
}

/// A Hamiltonian with `dH(R) = 0`, built from Reeb-invariant functions:
/// `z` on `T³`, `|z₁|²` and `|z₂|²` on `S³`, `(x, y)` on the Heisenberg chart
/// and time alone on `S¹`. Returns `None` for other models.
pub fn random_strict_table<R: Rng + ?Sized>(
    m: &ManifoldModel,
    spec: &RandomSpec,
    rng: &mut R,
) -> Option<TermTable> {
    let coeffs = coefficients(spec.terms.max(1), spec.amplitude, rng);
    let mut terms = Vec::new();
    for c in coeffs {
        let tp = rng.gen_range(0..=spec.time_degree);
        match m.name() {
            "Torus3" => terms.push(Term::new(c, tp, vec![factor_for(m, 2, rng, spec.max_freq)])),
            "SphereS3" => {
                let pair = if rng.gen_bool(0.5) { [0, 1] } else { [2, 3] };
                for coord in pair {
                    terms.push(Term::new(c, tp, vec![Factor::Pow { coord, p: 2 }]));
                }
            }
            "HeisenbergChart" => {
                let coord = rng.gen_range(0..2);
                terms.push(Term::new(
                    c,
                    tp,
                    vec![Factor::Pow {
                        coord,
                        p: rng.gen_range(1..=2),
                    }],
                ));
            }
            "CircleS1" => terms.push(Term::new(c, tp.max(1), vec![])),
            _ => return None,
        }
    }
    Some(TermTable::new(terms))
}

/// `1 + Σ cᵢ·mᵢ(x)` with `Σ|cᵢ| = amplitude < 1`, so the result is positive
/// wherever the monomials are bounded by one.
pub fn random_positive<R: Rng + ?Sized>(
    m: &ManifoldModel,
    amplitude: f64,
    rng: &mut R,
) -> TermTable {
    let spec = RandomSpec {
        terms: 3,
        amplitude: amplitude.min(0.9),
        max_freq: 2,
        time_degree: 0,
    };
    let mut t = random_table(m, &spec, rng);
    t.terms.push(Term::constant(1.0));
    t
}

/// `ε·x₁` plus a small random quadratic perturbation on `S³`.
pub fn perturbed_height<R: Rng + ?Sized>(eps: f64, perturbation: f64, rng: &mut R) -> TermTable {
    let mut terms = vec![Term::new(eps, 0, vec![Factor::Pow { coord: 0, p: 1 }])];
    let coeffs = coefficients(3, perturbation, rng);
    for c in coeffs {
        let i = rng.gen_range(0..4);
        let j = rng.gen_range(0..4);
        let factors = if i == j {
            vec![Factor::Pow { coord: i, p: 2 }]
        } else {
            vec![
                Factor::Pow { coord: i, p: 1 },
                Factor::Pow { coord: j, p: 1 },
            ]
        };
        terms.push(Term::new(c, 0, factors));
    }
    TermTable::new(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ContactFrame;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tables_are_bounded_and_deterministic() {
        let m = ManifoldModel::torus3();
        let spec = RandomSpec::default();
        let a = random_table(&m, &spec, &mut ChaCha8Rng::seed_from_u64(5));
        let b = random_table(&m, &spec, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x = m.random_point(&mut rng);
            assert!(a.eval(rng.gen(), x.as_slice()).abs() <= spec.amplitude + 1e-12);
        }
    }

    #[test]
    fn strict_tables_commute_with_reeb() {
        let spec = RandomSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in [
            ManifoldModel::torus3(),
            ManifoldModel::sphere3(),
            ManifoldModel::heisenberg(),
            ManifoldModel::circle(),
        ] {
            let t = random_strict_table(&m, &spec, &mut rng).unwrap();
            for _ in 0..20 {
                let x = m.random_point(&mut rng);
                let (_, g) = t.eval_grad(0.4, x.as_slice());
                let r = ContactFrame::at(&m, &x).unwrap().reeb();
                let dr: f64 = g.iter().zip(r.iter()).map(|(a, b)| a * b).sum();
                assert!(dr.abs() < 1e-12, "{}: {dr}", m.name());
            }
        }
    }

    #[test]
    fn positive_tables_are_positive() {
        let m = ManifoldModel::torus3();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_positive(&m, 0.6, &mut rng);
        for _ in 0..100 {
            let x = m.random_point(&mut rng);
            assert!(f.eval(0.0, x.as_slice()) >= 0.4 - 1e-12);
        }
    }
}
