//! Fixed inputs shared by the benchmarks.

use contact_core::hamiltonian::table;
use contact_core::terms::{Factor, Term, TermTable};
use contact_core::HamRef;

/// A non-strict, time-dependent Hamiltonian on `T³`.
pub fn torus_hamiltonian() -> HamRef {
    table(TermTable::new(vec![
        Term::new(
            0.3,
            0,
            vec![
                Factor::Cos { coord: 0, k: 1 },
                Factor::Sin { coord: 2, k: 1 },
            ],
        ),
        Term::new(0.2, 1, vec![Factor::Sin { coord: 1, k: 2 }]),
        Term::new(0.1, 0, vec![Factor::Cos { coord: 2, k: 1 }]),
    ]))
}

/// `a|z₁|² + b|z₂|²` on `S³`.
pub fn hopf_hamiltonian(a: f64, b: f64) -> HamRef {
    let sq = |coord| Factor::Pow { coord, p: 2 };
    table(TermTable::new(vec![
        Term::new(a, 0, vec![sq(0)]),
        Term::new(a, 0, vec![sq(1)]),
        Term::new(b, 0, vec![sq(2)]),
        Term::new(b, 0, vec![sq(3)]),
    ]))
}
