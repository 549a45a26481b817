//! Frequency response on a grid, with phase unwrapping and exact delay.

use crate::error::{Error, Result};
use crate::scalar::{from_polar, jw, sc, to_f64, Scalar, C};
use crate::tf::RationalTf;
use nalgebra::ComplexField as _;

/// One point of a Bode data set. `magnitude` is linear, `phase` is radians,
/// unwrapped along the grid it was computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqSample<T: Scalar> {
    pub omega: T,
    pub magnitude: T,
    pub phase: T,
}

impl<T: Scalar> FreqSample<T> {
    pub fn as_complex(&self) -> C<T> {
        from_polar(self.magnitude, self.phase)
    }
}

/// Logarithmic grid, `points_per_decade` samples per decade over `[lo, hi]`.
pub fn log_grid<T: Scalar>(lo: T, hi: T, points_per_decade: usize) -> Vec<T> {
    assert!(lo > T::zero() && hi > lo);
    let decades = to_f64(hi / lo).log10();
    let n = ((decades * points_per_decade as f64).ceil() as usize).max(2);
    let llo = lo.ln();
    let lhi = hi.ln();
    (0..=n)
        .map(|i| {
            let t = sc::<T>(i as f64 / n as f64);
            (llo + (lhi - llo) * t).exp()
        })
        .collect()
}

/// Default Bode analysis grid: 200 points/decade over [1e-3, 1e3] rad/s.
pub fn default_grid<T: Scalar>() -> Vec<T> {
    log_grid(sc(1e-3), sc(1e3), 200)
}

/// Denominator magnitudes below this signal a pole on the evaluated axis.
const SINGULAR_TOL: f64 = 1e-12;

/// Evaluate `G(j omega)` over a strictly increasing positive grid.
/// The rational part's phase is unwrapped along the grid; the delay
/// contributes exactly `-omega * L` (magnitude 1).
pub fn freq_response<T: Scalar>(tf: &RationalTf<T>, omegas: &[T]) -> Result<Vec<FreqSample<T>>> {
    if omegas.is_empty() {
        return Ok(Vec::new());
    }
    if omegas[0] <= T::zero() {
        return Err(Error::InvalidInput("frequencies must be > 0".into()));
    }
    if omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "frequencies must be strictly increasing".into(),
        ));
    }
    let two_pi = sc::<T>(std::f64::consts::TAU);
    let pi = sc::<T>(std::f64::consts::PI);
    let mut out = Vec::with_capacity(omegas.len());
    let mut prev_phase: Option<T> = None;
    for &w in omegas {
        let s = jw(w);
        let d = tf.den.eval(s);
        if d.modulus() < sc(SINGULAR_TOL) {
            return Err(Error::SingularFrequency { omega: to_f64(w) });
        }
        let r = tf.num.eval(s) / d;
        let mag = r.modulus();
        let mut ph = r.argument();
        if let Some(prev) = prev_phase {
            while ph - prev > pi {
                ph -= two_pi;
            }
            while prev - ph > pi {
                ph += two_pi;
            }
        }
        prev_phase = Some(ph);
        out.push(FreqSample {
            omega: w,
            magnitude: mag,
            phase: ph - w * tf.delay,
        });
    }
    Ok(out)
}

/// Complementary sensitivity `T = G/(1+G)` computed pointwise from
/// open-loop samples. Exact even with delay: no rationalization needed
/// in the frequency domain.
pub fn unity_feedback_response<T: Scalar>(
    open_loop: &[FreqSample<T>],
) -> Result<Vec<FreqSample<T>>> {
    let one = C::<T>::new(T::one(), T::zero());
    let mut out = Vec::with_capacity(open_loop.len());
    for s in open_loop {
        let g = s.as_complex();
        let den = one + g;
        if den.modulus() < sc(SINGULAR_TOL) {
            return Err(Error::ClosedLoopSingularity {
                omega: to_f64(s.omega),
            });
        }
        let t = g / den;
        out.push(FreqSample {
            omega: s.omega,
            magnitude: t.modulus(),
            phase: t.argument(),
        });
    }
    Ok(out)
}

/// Unwrapped phase of `G(j omega)` at one frequency, computed by walking a
/// log grid from `omega_start` up to `omega` (exact delay included).
pub fn phase_at<T: Scalar>(tf: &RationalTf<T>, omega: T, omega_start: T) -> Result<T> {
    let grid = log_grid(omega_start.min(omega / sc(2.0)), omega, 200);
    let resp = freq_response(tf, &grid)?;
    Ok(resp.last().unwrap().phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn first_order_lag_at_unity() {
        let tf = RationalTf::from_coeffs(&[1.0], &[1.0, 1.0], 0.0).unwrap();
        let r = freq_response(&tf, &[1.0]).unwrap();
        assert_relative_eq!(r[0].magnitude, 1.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(r[0].phase, -FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn eq14_dc_gain_limit() {
        // 272.6 e^{-0.5 s}/(s+2): magnitude -> 136.3 as omega -> 0
        let tf = RationalTf::from_coeffs(&[272.6], &[1.0, 2.0], 0.5).unwrap();
        let r = freq_response(&tf, &[1e-6]).unwrap();
        assert_relative_eq!(r[0].magnitude, 136.3, max_relative = 1e-9);
    }

    #[test]
    fn pure_delay_phase() {
        let tf = RationalTf::from_coeffs(&[1.0], &[1.0], 0.5).unwrap();
        let r = freq_response(&tf, &[2.0]).unwrap();
        assert_relative_eq!(r[0].magnitude, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r[0].phase, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn singular_frequency_detected() {
        // pole exactly on j1: den = s^2 + 1
        let tf = RationalTf::from_coeffs(&[1.0], &[1.0, 0.0, 1.0], 0.0).unwrap();
        assert!(matches!(
            freq_response(&tf, &[1.0]),
            Err(Error::SingularFrequency { .. })
        ));
    }

    #[test]
    fn unwrap_keeps_adjacent_jumps_small() {
        // high-order lag + delay wraps several times over 3 decades
        let tf = RationalTf::from_coeffs(&[1.0], &[1.0, 4.0, 6.0, 4.0, 1.0], 0.5).unwrap();
        let grid = log_grid(0.01_f64, 100.0, 60);
        let r = freq_response(&tf, &grid).unwrap();
        for w in r.windows(2) {
            let rational_jump =
                (w[1].phase + w[1].omega * 0.5) - (w[0].phase + w[0].omega * 0.5);
            assert!(rational_jump.abs() < PI);
        }
        // total phase at high freq is far below -pi (delay dominates): unwrapped
        assert!(r.last().unwrap().phase < -3.0 * PI);
    }

    #[test]
    fn closed_loop_pointwise_algebra() {
        // G = -0.5 at some omega -> T = -1
        let samples = vec![FreqSample {
            omega: 1.0,
            magnitude: 0.5,
            phase: PI,
        }];
        let t = unity_feedback_response(&samples).unwrap();
        assert_relative_eq!(t[0].magnitude, 1.0, epsilon = 1e-12);
        assert_relative_eq!(t[0].phase.abs(), PI, epsilon = 1e-9);
    }

    #[test]
    fn integrator_gives_unit_t_at_low_freq() {
        let g = RationalTf::from_coeffs(&[1.0], &[1.0, 0.0], 0.0).unwrap();
        let r = freq_response(&g, &[1e-6]).unwrap();
        let t = unity_feedback_response(&r).unwrap();
        assert_relative_eq!(t[0].magnitude, 1.0, max_relative = 1e-5);
    }
}
