//! Sub-optimal H2 reduction to FOPTD / SOPTD structures: finite-horizon
//! impulse-response ISE as the H2 surrogate, DC gain pinned, multi-start
//! simplex descent over the remaining shape parameters.

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NmOptions};
use crate::scalar::{sc, to_f64, Scalar};
use crate::sim::impulse_samples;
use crate::ss::to_state_space;
use crate::tf::{rationalize_delay, RationalTf};

/// `K/(Ts+1) e^{-Ls}`; DC gain is `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoptdModel<T: Scalar> {
    pub k: T,
    pub t: T,
    pub l: T,
}

impl<T: Scalar> FoptdModel<T> {
    pub fn new(k: T, t: T, l: T) -> Self {
        assert!(t > T::zero() && l >= T::zero());
        Self { k, t, l }
    }

    pub fn to_tf(&self) -> RationalTf<T> {
        RationalTf {
            num: crate::poly::Polynomial::new(vec![self.k]),
            den: crate::poly::Polynomial::new(vec![self.t, T::one()]),
            delay: self.l,
        }
    }
}

/// `K wn^2/(s^2 + 2 zeta wn s + wn^2) e^{-Ls}`; DC gain is `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoptdModel<T: Scalar> {
    pub k: T,
    pub zeta: T,
    pub omega_n: T,
    pub l: T,
}

impl<T: Scalar> SoptdModel<T> {
    pub fn new(k: T, zeta: T, omega_n: T, l: T) -> Self {
        assert!(zeta > T::zero() && omega_n > T::zero() && l >= T::zero());
        Self { k, zeta, omega_n, l }
    }

    pub fn to_tf(&self) -> RationalTf<T> {
        let wn2 = self.omega_n * self.omega_n;
        RationalTf {
            num: crate::poly::Polynomial::new(vec![self.k * wn2]),
            den: crate::poly::Polynomial::new(vec![
                T::one(),
                sc::<T>(2.0) * self.zeta * self.omega_n,
                wn2,
            ]),
            delay: self.l,
        }
    }
}

/// Knobs of the reduction. Delays are Pade-rationalized at `pade_order`
/// for the ISE computation only.
#[derive(Debug, Clone, Copy)]
pub struct ReductionConfig<T: Scalar> {
    pub horizon: T,
    pub dt: T,
    pub pade_order: usize,
    pub max_iter: usize,
}

impl<T: Scalar> Default for ReductionConfig<T> {
    fn default() -> Self {
        Self {
            horizon: sc(30.0),
            dt: sc(0.01),
            pade_order: 4,
            max_iter: 250,
        }
    }
}

fn impulse_of<T: Scalar>(tf: &RationalTf<T>, cfg: &ReductionConfig<T>) -> Result<Vec<T>> {
    let rational = rationalize_delay(tf, cfg.pade_order);
    let ss = to_state_space(&rational)?;
    let n = (to_f64(cfg.horizon / cfg.dt).round() as usize) + 1;
    impulse_samples(&ss, cfg.dt, n)
}

fn ise<T: Scalar>(a: &[T], b: &[T], dt: T) -> T {
    let mut acc = T::zero();
    let last = a.len() - 1;
    for i in 0..=last {
        let d = a[i] - b[i];
        let w = if i == 0 || i == last { sc(0.5) } else { T::one() };
        acc += w * d * d;
    }
    acc * dt
}

fn require_stable<T: Scalar>(tf: &RationalTf<T>) -> Result<()> {
    if let Some(re) = tf.max_pole_re() {
        if re >= T::zero() {
            return Err(Error::Instability {
                max_pole_re: to_f64(re),
            });
        }
    }
    Ok(())
}

/// Finite-horizon integral of the squared impulse-response difference:
/// the time-domain surrogate of the squared H2 distance. Both systems must
/// be stable.
pub fn h2_error<T: Scalar>(
    full: &RationalTf<T>,
    reduced: &RationalTf<T>,
    cfg: &ReductionConfig<T>,
) -> Result<T> {
    require_stable(full)?;
    require_stable(reduced)?;
    let hf = impulse_of(full, cfg)?;
    let hr = impulse_of(reduced, cfg)?;
    Ok(ise(&hf, &hr, cfg.dt))
}

/// Reduction result: the fitted model and its achieved ISE.
#[derive(Debug, Clone, Copy)]
pub struct Reduced<M> {
    pub model: M,
    pub h2_error: f64,
}

fn dc_gain_of<T: Scalar>(full: &RationalTf<T>) -> Result<T> {
    let k = full
        .dc_gain()?
        .finite()
        .ok_or_else(|| Error::InvalidInput("full model has infinite DC gain".into()))?;
    if k == T::zero() {
        return Err(Error::InvalidInput("full model has zero DC gain".into()));
    }
    Ok(k)
}

/// Fit `K/(Ts+1) e^{-Ls}` with `K` pinned to the full model's DC gain and
/// `(T, L)` found by multi-start Nelder-Mead in log space.
pub fn reduce_foptd<T: Scalar>(
    full: &RationalTf<T>,
    cfg: &ReductionConfig<T>,
) -> Result<Reduced<FoptdModel<T>>> {
    require_stable(full)?;
    let k = dc_gain_of(full)?;
    let href = impulse_of(full, cfg)?;
    let starts: Vec<f64> = vec![0.1, 0.25, 0.5, 1.0, 2.0];
    let mut best: Option<(Vec<T>, T)> = None;
    let opts = NmOptions::<T> {
        max_iter: cfg.max_iter,
        ..Default::default()
    };
    for &t0 in &starts {
        for &l0 in &starts {
            let mut objective = |x: &[T]| -> T {
                let t = x[0].exp();
                let l = x[1].exp();
                let model = FoptdModel::new(k, t, l);
                match impulse_of(&model.to_tf(), cfg) {
                    Ok(h) => ise(&href, &h, cfg.dt),
                    Err(_) => sc(1e100),
                }
            };
            let x0 = [sc::<T>(t0.ln()), sc::<T>(l0.ln())];
            let (x, fx, _) = nelder_mead(&mut objective, &x0, sc(0.3), &opts);
            if best.as_ref().map_or(true, |(_, bf)| fx < *bf) {
                best = Some((x, fx));
            }
        }
    }
    let (x, fx) = best.unwrap();
    if !fx.is_finite() || fx >= sc(1e100) {
        return Err(Error::ReductionFailed {
            best_objective: to_f64(fx),
        });
    }
    Ok(Reduced {
        model: FoptdModel::new(k, x[0].exp(), x[1].exp()),
        h2_error: to_f64(fx),
    })
}

/// Fit `K wn^2/(s^2+2 zeta wn s + wn^2) e^{-Ls}` with `K` pinned; same
/// scheme over `(zeta, omega_n, L)`.
pub fn reduce_soptd<T: Scalar>(
    full: &RationalTf<T>,
    cfg: &ReductionConfig<T>,
) -> Result<Reduced<SoptdModel<T>>> {
    require_stable(full)?;
    let k = dc_gain_of(full)?;
    let href = impulse_of(full, cfg)?;
    let zeta_starts = [0.7, 1.0, 1.5];
    let wn_starts = [0.5, 1.0, 2.0];
    let l_starts = [0.1, 0.5, 2.0];
    let mut best: Option<(Vec<T>, T)> = None;
    let opts = NmOptions::<T> {
        max_iter: cfg.max_iter,
        ..Default::default()
    };
    for &z0 in &zeta_starts {
        for &w0 in &wn_starts {
            for &l0 in &l_starts {
                let mut objective = |x: &[T]| -> T {
                    let model = SoptdModel::new(k, x[0].exp(), x[1].exp(), x[2].exp());
                    match impulse_of(&model.to_tf(), cfg) {
                        Ok(h) => ise(&href, &h, cfg.dt),
                        Err(_) => sc(1e100),
                    }
                };
                let x0 = [sc::<T>(z0.ln()), sc::<T>(w0.ln()), sc::<T>(l0.ln())];
                let (x, fx, _) = nelder_mead(&mut objective, &x0, sc(0.3), &opts);
                if best.as_ref().map_or(true, |(_, bf)| fx < *bf) {
                    best = Some((x, fx));
                }
            }
        }
    }
    let (x, fx) = best.unwrap();
    if !fx.is_finite() || fx >= sc(1e100) {
        return Err(Error::ReductionFailed {
            best_objective: to_f64(fx),
        });
    }
    Ok(Reduced {
        model: SoptdModel::new(k, x[0].exp(), x[1].exp(), x[2].exp()),
        h2_error: to_f64(fx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_systems_have_zero_error() {
        let tf = FoptdModel::new(2.0, 1.0, 0.3).to_tf();
        let cfg = ReductionConfig::default();
        let e = h2_error(&tf, &tf.clone(), &cfg).unwrap();
        assert!(e.abs() < 1e-15);
    }

    #[test]
    fn closed_form_first_order_pair() {
        // int_0^inf (e^{-t} - e^{-1.01 t})^2 dt = 1/2 - 2/2.01 + 1/2.02
        let a = RationalTf::from_coeffs(&[1.0], &[1.0, 1.0], 0.0).unwrap();
        let b = RationalTf::from_coeffs(&[1.0], &[1.0, 1.01], 0.0).unwrap();
        let cfg = ReductionConfig::default();
        let got = h2_error(&a, &b, &cfg).unwrap();
        let exact = 0.5 - 2.0 / 2.01 + 1.0 / 2.02;
        assert_relative_eq!(got, exact, max_relative = 0.01);
    }

    #[test]
    fn unstable_input_rejected() {
        let bad = RationalTf::from_coeffs(&[1.0], &[1.0, -1.0], 0.0).unwrap();
        let good = FoptdModel::new(1.0, 1.0, 0.0).to_tf();
        let cfg = ReductionConfig::default();
        assert!(matches!(
            h2_error(&bad, &good, &cfg),
            Err(Error::Instability { .. })
        ));
        assert!(matches!(
            reduce_foptd(&bad, &cfg),
            Err(Error::Instability { .. })
        ));
    }

    #[test]
    fn foptd_fixed_point_recovery() {
        let truth = FoptdModel::new(2.0, 1.0, 0.3);
        let cfg = ReductionConfig::default();
        let fit = reduce_foptd(&truth.to_tf(), &cfg).unwrap();
        assert_relative_eq!(fit.model.k, 2.0, epsilon = 1e-10);
        assert_relative_eq!(fit.model.t, 1.0, epsilon = 1e-4);
        assert_relative_eq!(fit.model.l, 0.3, epsilon = 1e-4);
    }

    #[test]
    fn soptd_fixed_point_recovery() {
        let truth = SoptdModel::new(3.0, 0.9, 1.2, 0.4);
        let cfg = ReductionConfig::default();
        let fit = reduce_soptd(&truth.to_tf(), &cfg).unwrap();
        assert_relative_eq!(fit.model.k, 3.0, epsilon = 1e-10);
        assert_relative_eq!(fit.model.zeta, 0.9, epsilon = 1e-3);
        assert_relative_eq!(fit.model.omega_n, 1.2, epsilon = 1e-3);
        assert_relative_eq!(fit.model.l, 0.4, epsilon = 1e-3);
    }

    #[test]
    fn dc_gain_is_pinned_structurally() {
        // 4th-order stable system
        let full = RationalTf::from_coeffs(&[5.0], &[1.0, 3.0, 4.0, 3.0, 1.0], 0.0).unwrap();
        let cfg = ReductionConfig::default();
        let fit = reduce_foptd(&full, &cfg).unwrap();
        assert_relative_eq!(
            fit.model.k,
            full.dc_gain().unwrap().finite().unwrap(),
            max_relative = 1e-12
        );
    }
}
