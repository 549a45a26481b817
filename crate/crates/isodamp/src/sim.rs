//! Uniformly sampled signals and exact-ZOH time simulation.

use crate::error::{Error, Result};
use crate::scalar::{sc, Scalar};
use crate::ss::{zoh_discretize, StateSpace};
use nalgebra::DVector;

/// Uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T: Scalar> {
    pub t0: T,
    pub dt: T,
    pub values: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(t0: T, dt: T, values: Vec<T>) -> Self {
        assert!(dt > T::zero() && !values.is_empty());
        Self { t0, dt, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> T {
        self.t0 + self.dt * sc::<T>(i as f64)
    }

    /// Constant signal of `n` samples.
    pub fn constant(value: T, dt: T, n: usize) -> Self {
        Self::new(T::zero(), dt, vec![value; n])
    }

    /// Unit step from t = 0.
    pub fn unit_step(dt: T, n: usize) -> Self {
        Self::constant(T::one(), dt, n)
    }

    /// Truncated ramp: 0 until `start`, linear to `level` over `ramp`, then flat.
    pub fn truncated_ramp(level: T, start: T, ramp: T, dt: T, n: usize) -> Self {
        let values = (0..n)
            .map(|i| {
                let t = dt * sc::<T>(i as f64);
                if t <= start {
                    T::zero()
                } else if t >= start + ramp {
                    level
                } else {
                    level * (t - start) / ramp
                }
            })
            .collect();
        Self::new(T::zero(), dt, values)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            t0: self.t0,
            dt: self.dt,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Simulate a state-space model from rest against a sampled input, with the
/// input held constant over each step (ZOH). The discretization uses the
/// matrix exponential, so piecewise-constant inputs incur no truncation
/// error. Divergence (non-finite output) reports the first offending index.
pub fn simulate<T: Scalar>(ss: &StateSpace<T>, input: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    let n = ss.order();
    let mut out = Vec::with_capacity(input.len());
    if n == 0 {
        for (i, &u) in input.values.iter().enumerate() {
            let y = ss.d * u;
            if !y.is_finite() {
                return Err(Error::Divergence { index: i });
            }
            out.push(y);
        }
        return Ok(TimeSeries::new(input.t0, input.dt, out));
    }
    let (ad, bd) = zoh_discretize(&ss.a, &ss.b, input.dt);
    let mut x = DVector::<T>::zeros(n);
    for (i, &u) in input.values.iter().enumerate() {
        let y = (&ss.c * &x)[0] + ss.d * u;
        if !y.is_finite() {
            return Err(Error::Divergence { index: i });
        }
        out.push(y);
        x = &ad * x + &bd * u;
    }
    Ok(TimeSeries::new(input.t0, input.dt, out))
}

/// Impulse-response samples `h(k dt) = C e^{A k dt} B` (plus `D` treated as
/// zero: strictly proper systems only). Exact sampling via propagation of
/// `x0 = B`.
pub fn impulse_samples<T: Scalar>(ss: &StateSpace<T>, dt: T, n: usize) -> Result<Vec<T>> {
    let order = ss.order();
    if order == 0 {
        return Ok(vec![T::zero(); n]);
    }
    let (ad, _) = zoh_discretize(&ss.a, &ss.b, dt);
    let mut x = ss.b.clone();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let h = (&ss.c * &x)[0];
        if !h.is_finite() {
            return Err(Error::Divergence { index: i });
        }
        out.push(h);
        x = &ad * x;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ss::to_state_space;
    use crate::tf::RationalTf;
    use approx::assert_relative_eq;

    #[test]
    fn first_order_step_is_exact() {
        let tf = RationalTf::from_coeffs(&[1.0], &[1.0, 1.0], 0.0).unwrap();
        let ss = to_state_space(&tf).unwrap();
        let u = TimeSeries::unit_step(0.1, 100);
        let y = simulate(&ss, &u).unwrap();
        for i in 0..y.len() {
            let t = 0.1 * i as f64;
            assert_relative_eq!(y.values[i], 1.0 - (-t).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn integrator_ramp_is_exact() {
        let tf = RationalTf::from_coeffs(&[1.0], &[1.0, 0.0], 0.0).unwrap();
        let ss = to_state_space(&tf).unwrap();
        let u = TimeSeries::unit_step(0.25, 40);
        let y = simulate(&ss, &u).unwrap();
        for i in 0..y.len() {
            assert_relative_eq!(y.values[i], 0.25 * i as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn divergence_reports_index() {
        // unstable pole +10; the state blows up within a few hundred steps
        let tf = RationalTf::from_coeffs(&[1e300], &[1.0, -10.0], 0.0).unwrap();
        let ss = to_state_space(&tf).unwrap();
        let u = TimeSeries::unit_step(0.5, 400);
        match simulate(&ss, &u) {
            Err(Error::Divergence { index }) => assert!(index > 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn truncated_ramp_profile() {
        let r = TimeSeries::truncated_ramp(0.3, 1.0, 3.0, 0.5, 12);
        assert_relative_eq!(r.values[0], 0.0);
        assert_relative_eq!(r.values[2], 0.0); // t = 1.0 still zero
        assert_relative_eq!(r.values[4], 0.3 / 3.0); // t = 2.0, 1 s into ramp
        assert_relative_eq!(r.values[11], 0.3); // past the ramp
    }
}
