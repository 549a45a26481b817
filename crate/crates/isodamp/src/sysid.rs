//! ARX least-squares identification and exact ZOH discrete-to-continuous
//! conversion.

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::{sc, to_f64, Scalar};
use crate::sim::TimeSeries;
use crate::ss::{char_poly, exp_integral, matrix_log, ss_to_tf, to_state_space, zoh_discretize, StateSpace};
use crate::tf::RationalTf;
use nalgebra::{DMatrix, DVector};

/// Lag counts of the ARX difference equation
/// `y(t) + a_1 y(t-1) + ... + a_n y(t-n) = b_1 u(t-1) + ... + b_m u(t-m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArxOrders {
    pub n: usize,
    pub m: usize,
}

impl ArxOrders {
    pub fn new(n: usize, m: usize) -> Self {
        assert!(n >= 1 && m >= 1);
        Self { n, m }
    }

    fn lag(&self) -> usize {
        self.n.max(self.m)
    }
}

/// Fitted ARX coefficients with the sampling period they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct ArxModel<T: Scalar> {
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub ts: T,
}

impl<T: Scalar> ArxModel<T> {
    pub fn orders(&self) -> ArxOrders {
        ArxOrders::new(self.a.len(), self.b.len())
    }
}

/// Fit result: the model plus the one-step residual RMS of the fit.
#[derive(Debug, Clone)]
pub struct ArxFit<T: Scalar> {
    pub model: ArxModel<T>,
    pub residual_rms: T,
}

const COND_LIMIT: f64 = 1e12;

/// Least-squares ARX fit by SVD of the stacked regressor (no normal
/// equations). Errors when the regressor is rank deficient.
pub fn arx_fit<T: Scalar>(
    u: &TimeSeries<T>,
    y: &TimeSeries<T>,
    orders: ArxOrders,
) -> Result<ArxFit<T>> {
    if u.len() != y.len() {
        return Err(Error::InvalidInput("u and y must have the same length".into()));
    }
    if (u.dt - y.dt).abs() > sc(1e-12) {
        return Err(Error::InvalidInput("u and y must share the sampling period".into()));
    }
    let n = orders.n;
    let m = orders.m;
    let len = y.len();
    if len <= n + m + 10 {
        return Err(Error::InvalidInput(format!(
            "need more than n + m + 10 = {} samples, got {len}",
            n + m + 10
        )));
    }
    let p = orders.lag();
    let rows = len - p;
    let cols = n + m;
    let mut phi = DMatrix::<T>::zeros(rows, cols);
    let mut target = DVector::<T>::zeros(rows);
    for (r, t) in (p..len).enumerate() {
        for i in 1..=n {
            phi[(r, i - 1)] = -y.values[t - i];
        }
        for j in 1..=m {
            phi[(r, n + j - 1)] = u.values[t - j];
        }
        target[r] = y.values[t];
    }
    let svd = phi.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > T::zero()) || smax / smin > sc(COND_LIMIT) {
        return Err(Error::Unidentifiable {
            condition: if smin > T::zero() {
                to_f64(smax / smin)
            } else {
                f64::INFINITY
            },
        });
    }
    let theta = svd
        .solve(&target, sc(1e-300))
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let resid = &phi * &theta - &target;
    let rms = (resid.norm_squared() / sc(rows as f64)).sqrt();
    let model = ArxModel {
        a: (0..n).map(|i| theta[i]).collect(),
        b: (0..m).map(|j| theta[n + j]).collect(),
        ts: y.dt,
    };
    Ok(ArxFit {
        model,
        residual_rms: rms,
    })
}

/// Free-run simulation: the recursion consumes its own past outputs.
/// `y_init` seeds the first `y_init.len()` samples (at least `n` required).
pub fn arx_simulate<T: Scalar>(
    model: &ArxModel<T>,
    u: &TimeSeries<T>,
    y_init: &[T],
) -> Result<TimeSeries<T>> {
    let n = model.a.len();
    let m = model.b.len();
    if y_init.len() < n {
        return Err(Error::InvalidInput(format!(
            "y_init must provide at least n = {n} samples"
        )));
    }
    let len = u.len();
    let seed = y_init.len().min(len);
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&y_init[..seed]);
    for t in seed..len {
        let mut v = T::zero();
        for (i, &ai) in model.a.iter().enumerate() {
            v -= ai * out[t - 1 - i];
        }
        for (j, &bj) in model.b.iter().enumerate() {
            if t >= j + 1 {
                v += bj * u.values[t - 1 - j];
            }
        }
        out.push(v);
    }
    Ok(TimeSeries::new(u.t0, u.dt, out))
}

/// RMS of the free-run error against measured output (seeded with the first
/// `max(n, m)` measured samples).
pub fn free_run_rms<T: Scalar>(
    model: &ArxModel<T>,
    u: &TimeSeries<T>,
    y: &TimeSeries<T>,
) -> Result<T> {
    let p = model.orders().lag().min(y.len());
    let sim = arx_simulate(model, u, &y.values[..p])?;
    let mut acc = T::zero();
    let mut count = 0usize;
    for t in p..y.len() {
        let e = sim.values[t] - y.values[t];
        acc += e * e;
        count += 1;
    }
    Ok((acc / sc(count.max(1) as f64)).sqrt())
}

/// RMS of the one-step-ahead prediction error (measured history).
pub fn one_step_rms<T: Scalar>(
    model: &ArxModel<T>,
    u: &TimeSeries<T>,
    y: &TimeSeries<T>,
) -> Result<T> {
    let n = model.a.len();
    let m = model.b.len();
    let p = n.max(m);
    let mut acc = T::zero();
    let mut count = 0usize;
    for t in p..y.len() {
        let mut pred = T::zero();
        for (i, &ai) in model.a.iter().enumerate() {
            pred -= ai * y.values[t - 1 - i];
        }
        for (j, &bj) in model.b.iter().enumerate() {
            pred += bj * u.values[t - 1 - j];
        }
        let e = pred - y.values[t];
        acc += e * e;
        count += 1;
    }
    Ok((acc / sc(count.max(1) as f64)).sqrt())
}

/// Pick the candidate order with the smallest free-run RMS on the fit data;
/// ties go to the smaller n + m. Candidates whose fit fails (e.g. exactly
/// rank-deficient over-parameterizations on noiseless data) are skipped;
/// the last error is returned only if every candidate fails.
pub fn select_order<T: Scalar>(
    u: &TimeSeries<T>,
    y: &TimeSeries<T>,
    candidates: &[ArxOrders],
) -> Result<ArxOrders> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no order candidates".into()));
    }
    let mut best: Option<(T, usize, ArxOrders)> = None;
    let mut last_err = None;
    for &cand in candidates {
        match arx_fit(u, y, cand).and_then(|fit| free_run_rms(&fit.model, u, y)) {
            Ok(rms) => {
                let key = (rms, cand.n + cand.m);
                let better = match &best {
                    None => true,
                    Some((brms, bsum, _)) => {
                        key.0 < *brms || (key.0 == *brms && key.1 < *bsum)
                    }
                };
                if better {
                    best = Some((key.0, key.1, cand));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((_, _, orders)) => Ok(orders),
        None => Err(last_err.unwrap()),
    }
}

/// Default candidate sweep: n in 4..=8, m in 2..=8.
pub fn default_order_candidates() -> Vec<ArxOrders> {
    let mut out = Vec::new();
    for n in 4..=8 {
        for m in 2..=8 {
            out.push(ArxOrders::new(n, m));
        }
    }
    out
}

/// Exact ZOH inverse: discrete ARX to continuous transfer function via the
/// state-space matrix logarithm `A = log(A_d)/Ts`, with `B` recovered from
/// the ZOH integral relation. Poles at z = 0 (excess input lags) become a
/// pure delay of whole sampling periods.
pub fn d2c_zoh<T: Scalar>(model: &ArxModel<T>) -> Result<RationalTf<T>> {
    if model.ts <= T::zero() {
        return Err(Error::InvalidInput("sampling period must be > 0".into()));
    }
    let n = model.a.len();
    let m = model.b.len();
    let p = n.max(m);
    // B(z)/A(z) in positive powers of z after multiplying by z^p
    let mut den_z = vec![T::zero(); p + 1];
    den_z[0] = T::one();
    for (i, &ai) in model.a.iter().enumerate() {
        den_z[1 + i] = ai;
    }
    let mut num_z = vec![T::zero(); p];
    for (j, &bj) in model.b.iter().enumerate() {
        num_z[j] = bj;
    }
    let den_poly = Polynomial::new(den_z);
    let num_poly = Polynomial::new(num_z);
    // poles exactly at the origin are pure sample delays
    let d = den_poly.trailing_zeros();
    let den_poly = den_poly.strip_trailing_zeros(d);
    let delay = model.ts * sc::<T>(d as f64);
    if num_poly.degree() > den_poly.degree() {
        return Err(Error::UnsupportedArxStructure { n, m });
    }
    for root in den_poly.roots() {
        let near_real = root.im.abs() <= sc::<T>(1e-9) * (T::one() + root.re.abs());
        if near_real && root.re <= sc(crate::poly::TRIM_TOL) {
            return Err(Error::LogarithmBranch {
                pole: to_f64(root.re),
            });
        }
    }
    let disc = RationalTf::new(num_poly, den_poly, T::zero())?;
    let dss = to_state_space(&disc)?;
    if dss.order() == 0 {
        let mut tf = RationalTf::constant(dss.d);
        tf.delay = delay;
        return Ok(tf);
    }
    let a_c = matrix_log(&dss.a)? / model.ts;
    let m_int = exp_integral(&a_c, model.ts);
    let b_c = m_int
        .lu()
        .solve(&dss.b)
        .ok_or(Error::InvalidInput("ZOH integral matrix is singular".into()))?;
    let css = StateSpace {
        a: a_c,
        b: b_c,
        c: dss.c,
        d: dss.d,
    };
    let mut tf = ss_to_tf(&css);
    tf.delay = delay;
    Ok(tf)
}

/// ZOH discretization of a stable, strictly proper, delay-free continuous
/// transfer function into an ARX model at period `ts` (test oracle and
/// round-trip partner of [`d2c_zoh`]).
pub fn c2d_zoh_arx<T: Scalar>(tf: &RationalTf<T>, ts: T) -> Result<ArxModel<T>> {
    let ss = to_state_space(tf)?;
    let n = ss.order();
    if n == 0 {
        return Err(Error::InvalidInput("constant system has no ARX form".into()));
    }
    let (ad, bd) = zoh_discretize(&ss.a, &ss.b, ts);
    let den = char_poly(&ad);
    let bc = &bd * &ss.c;
    let num = char_poly(&(&ad - bc)).sub(&den).add(&den.scale(ss.d));
    // den is monic degree n; a_i are its trailing coefficients
    let a: Vec<T> = den.coeffs()[1..].to_vec();
    let mut b = vec![T::zero(); n];
    let offset = n - (num.degree() + 1);
    for (i, &c) in num.coeffs().iter().enumerate() {
        b[offset + i] = c;
    }
    Ok(ArxModel { a, b, ts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prbs(n: usize, seed: u64) -> TimeSeries<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        TimeSeries::new(0.0, 0.1, v)
    }

    #[test]
    fn exact_recovery_noiseless() {
        let truth = ArxModel {
            a: vec![-1.5, 0.7],
            b: vec![1.0, 0.5],
            ts: 0.1,
        };
        let u = prbs(400, 7);
        let y = arx_simulate(&truth, &u, &[0.0, 0.0]).unwrap();
        let fit = arx_fit(&u, &y, ArxOrders::new(2, 2)).unwrap();
        for (got, want) in fit.model.a.iter().zip(&truth.a) {
            assert_relative_eq!(got, want, epsilon = 1e-8);
        }
        for (got, want) in fit.model.b.iter().zip(&truth.b) {
            assert_relative_eq!(got, want, epsilon = 1e-8);
        }
        assert!(fit.residual_rms < 1e-10);
    }

    #[test]
    fn degenerate_input_unidentifiable() {
        let u = TimeSeries::constant(0.0, 0.1, 100);
        let y = TimeSeries::constant(0.0, 0.1, 100);
        assert!(matches!(
            arx_fit(&u, &y, ArxOrders::new(1, 1)),
            Err(Error::Unidentifiable { .. })
        ));
    }

    #[test]
    fn pure_delay_model_simulation() {
        // a=[0], b=[1]: output equals input delayed one sample
        let model = ArxModel {
            a: vec![0.0],
            b: vec![1.0],
            ts: 0.1,
        };
        let mut u = TimeSeries::constant(0.0, 0.1, 10);
        u.values[2] = 1.0;
        let y = arx_simulate(&model, &u, &[0.0]).unwrap();
        assert_relative_eq!(y.values[3], 1.0);
        assert_relative_eq!(y.values[4], 0.0);
    }

    #[test]
    fn one_step_beats_free_run() {
        let truth = ArxModel {
            a: vec![-1.5, 0.7],
            b: vec![1.0, 0.5],
            ts: 0.1,
        };
        let u = prbs(300, 3);
        let clean = arx_simulate(&truth, &u, &[0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let noisy = clean.map(|v| v + 0.05 * rng.gen_range(-1.0..1.0));
        let fit = arx_fit(&u, &noisy, ArxOrders::new(2, 2)).unwrap();
        let osr = one_step_rms(&fit.model, &u, &noisy).unwrap();
        let frr = free_run_rms(&fit.model, &u, &noisy).unwrap();
        assert!(osr <= frr);
    }

    #[test]
    fn select_order_finds_truth() {
        let truth = ArxModel {
            a: vec![-1.2, 0.5],
            b: vec![0.8, 0.3],
            ts: 0.1,
        };
        let u = prbs(500, 11);
        let y = arx_simulate(&truth, &u, &[0.0, 0.0]).unwrap();
        let mut cands = Vec::new();
        for n in 1..=4 {
            for m in 1..=4 {
                cands.push(ArxOrders::new(n, m));
            }
        }
        let sel = select_order(&u, &y, &cands).unwrap();
        assert_eq!(sel, ArxOrders::new(2, 2));
    }

    #[test]
    fn select_order_single_candidate() {
        let u = prbs(200, 1);
        let truth = ArxModel {
            a: vec![-0.5],
            b: vec![1.0],
            ts: 0.1,
        };
        let y = arx_simulate(&truth, &u, &[0.0]).unwrap();
        let only = ArxOrders::new(1, 1);
        assert_eq!(select_order(&u, &y, &[only]).unwrap(), only);
    }

    #[test]
    fn d2c_first_order_pole() {
        // ZOH of 1/(s+1) at Ts=0.1: b1 = 1-e^{-0.1}, a1 = -e^{-0.1}
        let e = (-0.1f64).exp();
        let model = ArxModel {
            a: vec![-e],
            b: vec![1.0 - e],
            ts: 0.1,
        };
        let tf = d2c_zoh(&model).unwrap();
        let pole = tf.poles()[0];
        assert_relative_eq!(pole.re, -1.0, epsilon = 1e-9);
        assert_relative_eq!(pole.im, 0.0, epsilon = 1e-9);
        assert_relative_eq!(
            tf.dc_gain().unwrap().finite().unwrap(),
            1.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn d2c_static_gain_with_sample_delay() {
        // n=1 with a1=0, b1=k: pure one-sample delay of gain k
        let model = ArxModel {
            a: vec![0.0],
            b: vec![2.5],
            ts: 0.1,
        };
        let tf = d2c_zoh(&model).unwrap();
        assert_relative_eq!(
            tf.dc_gain().unwrap().finite().unwrap(),
            2.5,
            max_relative = 1e-12
        );
        assert_relative_eq!(tf.delay, 0.1);
    }

    #[test]
    fn d2c_negative_real_pole_rejected() {
        let model = ArxModel {
            a: vec![0.5], // pole at z = -0.5
            b: vec![1.0],
            ts: 0.1,
        };
        assert!(matches!(
            d2c_zoh(&model),
            Err(Error::LogarithmBranch { .. })
        ));
    }

    #[test]
    fn roundtrip_c2d_then_d2c() {
        let tf = RationalTf::from_coeffs(&[3.0, 2.0], &[1.0, 3.0, 2.0], 0.0).unwrap();
        let arx = c2d_zoh_arx(&tf, 0.05).unwrap();
        let back = d2c_zoh(&arx).unwrap();
        // compare normalized coefficients
        let k = tf.den.leading() / back.den.leading();
        for (a, b) in back.den.coeffs().iter().zip(tf.den.coeffs()) {
            assert_relative_eq!(a * k, b, max_relative = 1e-8, epsilon = 1e-10);
        }
        for (a, b) in back.num.coeffs().iter().zip(tf.num.coeffs()) {
            assert_relative_eq!(a * k, b, max_relative = 1e-8, epsilon = 1e-10);
        }
    }
}
