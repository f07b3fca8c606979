//! Adaptive Dormand–Prince 5(4) stepper with exact stops at requested times.

use serde::{Deserialize, Serialize};

use crate::error::{ContactError, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th minus embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Counters accumulated over one or several integrations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest constraint correction applied after an accepted step.
    pub max_projection: f64,
    pub tol: f64,
}

impl IntegratorStats {
    pub fn merge(&mut self, other: &IntegratorStats) {
        self.steps += other.steps;
        self.rejected += other.rejected;
        self.evaluations += other.evaluations;
        self.max_projection = self.max_projection.max(other.max_projection);
        self.tol = self.tol.max(other.tol);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub atol: f64,
    pub rtol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self {
            atol: tol,
            rtol: tol,
            h_min: 1e-13,
            max_steps: 500_000,
        }
    }

    /// Integrates from `(t0, y0)` through each time in `stops` (monotone, in
    /// either direction), returning the state at every stop. `post` is applied
    /// to each accepted state and returns the size of the correction it made.
    pub fn integrate<F, P>(
        &self,
        mut rhs: F,
        y0: &[f64],
        t0: f64,
        stops: &[f64],
        mut post: P,
        stats: &mut IntegratorStats,
    ) -> Result<Vec<Vec<f64>>>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
        P: FnMut(&mut [f64]) -> f64,
    {
        let n = y0.len();
        stats.tol = stats.tol.max(self.atol.max(self.rtol));
        let mut out = Vec::with_capacity(stops.len());
        let mut y = y0.to_vec();
        let mut t = t0;
        let span = stops.last().map(|s| (s - t0).abs()).unwrap_or(0.0);
        if span == 0.0 {
            return Ok(stops.iter().map(|_| y.clone()).collect());
        }
        let dir = if stops.last().copied().unwrap_or(t0) >= t0 {
            1.0
        } else {
            -1.0
        };
        let mut h = (0.02 * span).min(0.05);
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        let mut tmp = vec![0.0; n];
        let mut y_new = vec![0.0; n];
        let mut have_k1 = false;
        let mut steps_here = 0usize;

        for &stop in stops {
            while (stop - t) * dir > 1e-15 * (1.0 + t.abs()) {
                if steps_here >= self.max_steps {
                    return Err(ContactError::IntegrationFailure {
                        t,
                        reason: format!("step budget {} exhausted", self.max_steps),
                    });
                }
                let remaining = (stop - t).abs();
                let last = h >= remaining;
                let hs = if last { remaining } else { h };
                let step = hs * dir;

                if !have_k1 {
                    rhs(t, &y, &mut k[0])?;
                    stats.evaluations += 1;
                }
                let ok = self.trial(&mut rhs, t, &y, step, &mut k, &mut tmp, &mut y_new);
                stats.evaluations += 6;
                let err = match ok {
                    Ok(()) => self.error_norm(&y, &y_new, &k, step),
                    Err(_) => f64::INFINITY,
                };
                if err.is_finite() && err <= 1.0 {
                    let correction = post(&mut y_new);
                    stats.max_projection = stats.max_projection.max(correction);
                    std::mem::swap(&mut y, &mut y_new);
                    t = if last { stop } else { t + step };
                    stats.steps += 1;
                    steps_here += 1;
                    if correction == 0.0 {
                        // first-same-as-last
                        k.swap(0, 6);
                        have_k1 = true;
                    } else {
                        have_k1 = false;
                    }
                    let fac = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    // a clipped final step says nothing about the natural size
                    if !last || fac < 1.0 {
                        h = hs * fac;
                    }
                } else {
                    stats.rejected += 1;
                    steps_here += 1;
                    let fac = if err.is_finite() {
                        (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                    } else {
                        0.25
                    };
                    h = hs * fac;
                    if h < self.h_min {
                        return Err(ContactError::IntegrationFailure {
                            t,
                            reason: format!("step size underflow (h = {h:.3e})"),
                        });
                    }
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn trial<F>(
        &self,
        rhs: &mut F,
        t: f64,
        y: &[f64],
        h: f64,
        k: &mut [Vec<f64>; 7],
        tmp: &mut [f64],
        y_new: &mut [f64],
    ) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        let (k1, rest) = k.split_at_mut(1);
        let (k2, rest) = rest.split_at_mut(1);
        let (k3, rest) = rest.split_at_mut(1);
        let (k4, rest) = rest.split_at_mut(1);
        let (k5, rest) = rest.split_at_mut(1);
        let (k6, k7) = rest.split_at_mut(1);
        let (k1, k2, k3, k4, k5, k6, k7) = (
            &k1[0], &mut k2[0], &mut k3[0], &mut k4[0], &mut k5[0], &mut k6[0], &mut k7[0],
        );
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, tmp, k2)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, tmp, k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, tmp, k4)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, tmp, k5)?;
        for i in 0..n {
            tmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, tmp, k6)?;
        for i in 0..n {
            y_new[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h, y_new, k7)?;
        Ok(())
    }

    fn error_norm(&self, y: &[f64], y_new: &[f64], k: &[Vec<f64>; 7], h: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..y.len() {
            let e = h
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            let r = (e / scale).abs();
            if !r.is_finite() || !y_new[i].is_finite() {
                return f64::INFINITY;
            }
            worst = worst.max(r);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut stats = IntegratorStats::default();
        let out = Dopri5::new(1e-10)
            .integrate(
                |_, y, dy| {
                    dy[0] = -y[0];
                    Ok(())
                },
                &[1.0],
                0.0,
                &[0.5, 1.0],
                |_| 0.0,
                &mut stats,
            )
            .unwrap();
        assert!((out[0][0] - (-0.5f64).exp()).abs() < 1e-9);
        assert!((out[1][0] - (-1.0f64).exp()).abs() < 1e-9);
        assert!(stats.steps > 0);
    }

    #[test]
    fn backward_harmonic_oscillator() {
        let mut stats = IntegratorStats::default();
        let out = Dopri5::new(1e-11)
            .integrate(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                    Ok(())
                },
                &[1.0, 0.0],
                1.0,
                &[0.0],
                |_| 0.0,
                &mut stats,
            )
            .unwrap();
        // y(t) = cos(t − 1)
        assert!((out[0][0] - 1f64.cos()).abs() < 1e-9);
        assert!((out[0][1] - 1f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn time_dependent_rhs() {
        let mut stats = IntegratorStats::default();
        let out = Dopri5::new(1e-10)
            .integrate(
                |t, _, dy| {
                    dy[0] = 3.0 * t * t;
                    Ok(())
                },
                &[0.0],
                0.0,
                &[1.0],
                |_| 0.0,
                &mut stats,
            )
            .unwrap();
        assert!((out[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn failing_rhs_underflows() {
        let mut stats = IntegratorStats::default();
        let r = Dopri5::new(1e-8).integrate(
            |_, y, dy| {
                dy[0] = 1.0 / (0.5 - y[0]);
                Ok(())
            },
            &[0.0],
            0.0,
            &[1.0],
            |_| 0.0,
            &mut stats,
        );
        assert!(matches!(r, Err(ContactError::IntegrationFailure { .. })));
    }
}
