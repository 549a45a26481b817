//! Parallel-form PID and LQR-based tuning against FOPTD/SOPTD plants.

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::reduce::{FoptdModel, SoptdModel};
use crate::scalar::{sc, to_f64, Scalar};
use crate::tf::RationalTf;

/// Parallel PID `kp + ki/s + kd s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains<T: Scalar> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
}

impl<T: Scalar> PidGains<T> {
    pub fn new(kp: T, ki: T, kd: T) -> Result<Self> {
        if kp == T::zero() && ki == T::zero() {
            return Err(Error::InvalidInput(
                "at least one of kp, ki must be nonzero".into(),
            ));
        }
        if kp < T::zero() || ki < T::zero() || kd < T::zero() {
            return Err(Error::InvalidInput("gains must be nonnegative".into()));
        }
        Ok(Self { kp, ki, kd })
    }
}

/// Desired dominant closed-loop pole pair for LQR tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqrSpec<T: Scalar> {
    pub zeta_d: T,
    pub omega_d: T,
}

impl<T: Scalar> LqrSpec<T> {
    pub fn new(zeta_d: T, omega_d: T) -> Result<Self> {
        if !(zeta_d > T::zero() && zeta_d.is_finite() && omega_d > T::zero() && omega_d.is_finite())
        {
            return Err(Error::InvalidInput(
                "zeta_d, omega_d must be positive and finite".into(),
            ));
        }
        Ok(Self { zeta_d, omega_d })
    }
}

/// `(kd s^2 + kp s + ki)/s` with no derivative filter. A common `s` factor
/// (when ki = 0) is cancelled, so a pure P controller trims to a constant.
pub fn pid_tf<T: Scalar>(g: &PidGains<T>) -> RationalTf<T> {
    let num = Polynomial::new(vec![g.kd, g.kp, g.ki]);
    let den = Polynomial::new(vec![T::one(), T::zero()]);
    let common = num.trailing_zeros().min(den.trailing_zeros());
    RationalTf {
        num: num.strip_trailing_zeros(common),
        den: den.strip_trailing_zeros(common),
        delay: T::zero(),
    }
}

/// PID with a first-order derivative filter:
/// `kp + ki/s + kd s/(tau_f s + 1)`, proper (biproper).
pub fn pid_tf_filtered<T: Scalar>(g: &PidGains<T>, tau_f: T) -> RationalTf<T> {
    assert!(tau_f > T::zero());
    // (kp s (tf s+1) + ki (tf s+1) + kd s^2) / (s (tf s + 1))
    let s_tf1 = Polynomial::new(vec![tau_f, T::one()]);
    let num = Polynomial::new(vec![g.kp, T::zero()])
        .mul(&s_tf1)
        .add(&s_tf1.scale(g.ki))
        .add(&Polynomial::new(vec![g.kd, T::zero(), T::zero()]));
    let den = Polynomial::new(vec![T::one(), T::zero()]).mul(&s_tf1);
    RationalTf {
        num,
        den,
        delay: T::zero(),
    }
}

/// Plant family accepted by [`lqr_pid`].
#[derive(Debug, Clone, Copy)]
pub enum PlantModel<T: Scalar> {
    Foptd(FoptdModel<T>),
    Soptd(SoptdModel<T>),
}

/// Extra tuning knobs next to the (zeta_d, omega_d) spec.
#[derive(Debug, Clone, Copy)]
pub struct LqrOptions<T: Scalar> {
    /// Dimensionless derivative weighting for FOPTD plants; the derivative
    /// gain is `kd = derivative_weight / K`, so all three gains scale as 1/K.
    pub derivative_weight: T,
    /// Third-pole placement ratio for SOPTD plants: the non-dominant closed
    /// pole sits at `third_pole_ratio * zeta_d * omega_d`.
    pub third_pole_ratio: T,
}

impl<T: Scalar> Default for LqrOptions<T> {
    fn default() -> Self {
        Self {
            derivative_weight: T::zero(),
            third_pole_ratio: sc(5.0),
        }
    }
}

/// LQR-flavoured PID tuning. The plant delay is ignored at this stage; the
/// dominant dynamics are recast as a state model in (error-integral, error)
/// coordinates and the state weights that make the Riccati-optimal feedback
/// place the closed poles at `s^2 + 2 zeta_d omega_d s + omega_d^2` are
/// solved in closed form. Negative required weights (or negative gains)
/// signal an infeasible spec together with the feasible omega_d floor.
pub fn lqr_pid<T: Scalar>(
    plant: &PlantModel<T>,
    spec: &LqrSpec<T>,
    opts: &LqrOptions<T>,
) -> Result<PidGains<T>> {
    let two = sc::<T>(2.0);
    let four = sc::<T>(4.0);
    match plant {
        PlantModel::Foptd(p) => {
            if p.t <= T::zero() {
                return Err(Error::InvalidInput("plant time constant must be > 0".into()));
            }
            let k = p.k;
            let kd = opts.derivative_weight / k;
            // effective lag with the prescribed derivative folded in
            let t_eff = p.t + k * kd;
            let a = T::one() / t_eff;
            let zw = spec.zeta_d * spec.omega_d;
            // Riccati feasibility for Q = diag(q1, q2) >= 0:
            // q2 = (4 zeta^2 w^2 - 2 w^2 - a^2)/b^2 >= 0
            let q2_num = four * zw * zw - two * spec.omega_d * spec.omega_d - a * a;
            // proportional gain nonnegative: 2 zeta w t_eff >= 1
            let w_floor_kp = T::one() / (two * spec.zeta_d * t_eff);
            let w_floor_q2 = {
                let denom = four * spec.zeta_d * spec.zeta_d - two;
                if denom > T::zero() {
                    a / denom.sqrt()
                } else {
                    T::max_value().unwrap_or(sc(f64::MAX))
                }
            };
            let omega_min = w_floor_kp.max(w_floor_q2);
            if q2_num < T::zero() {
                return Err(Error::SpecInfeasible {
                    omega_min: to_f64(omega_min),
                });
            }
            let kp = (two * zw * t_eff - T::one()) / k;
            let ki = spec.omega_d * spec.omega_d * t_eff / k;
            if kp < T::zero() {
                return Err(Error::SpecInfeasible {
                    omega_min: to_f64(omega_min),
                });
            }
            PidGains::new(kp, ki, kd)
        }
        PlantModel::Soptd(p) => {
            let k = p.k;
            let wn2 = p.omega_n * p.omega_n;
            let alpha = opts.third_pole_ratio;
            let zw = spec.zeta_d * spec.omega_d;
            // desired: (s^2 + 2 zeta_d w_d s + w_d^2)(s + alpha zeta_d w_d)
            let kd = (zw * (two + alpha) - two * p.zeta * p.omega_n) / (k * wn2);
            let kp = (spec.omega_d * spec.omega_d * (T::one() + two * alpha * spec.zeta_d * spec.zeta_d)
                - wn2)
                / (k * wn2);
            let ki = alpha * zw * spec.omega_d * spec.omega_d / (k * wn2);
            if kd < T::zero() || kp < T::zero() || ki <= T::zero() {
                let w_floor_kd = two * p.zeta * p.omega_n / (spec.zeta_d * (two + alpha));
                let w_floor_kp =
                    p.omega_n / (T::one() + two * alpha * spec.zeta_d * spec.zeta_d).sqrt();
                return Err(Error::SpecInfeasible {
                    omega_min: to_f64(w_floor_kd.max(w_floor_kp)),
                });
            }
            PidGains::new(kp, ki, kd)
        }
    }
}

/// Delay-free closed-loop denominator of plant + PID (unity feedback):
/// used for verifying the placed poles.
pub fn delay_free_closed_loop_den<T: Scalar>(
    plant: &PlantModel<T>,
    gains: &PidGains<T>,
) -> Polynomial<T> {
    let mut plant_tf = match plant {
        PlantModel::Foptd(p) => p.to_tf(),
        PlantModel::Soptd(p) => p.to_tf(),
    };
    plant_tf.delay = T::zero();
    let open = pid_tf(gains).series(&plant_tf);
    open.den.add(&open.num)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pid_tf_matches_eq29_shape() {
        let g = PidGains::new(0.0059, 0.0019, 0.00082).unwrap();
        let tf = pid_tf(&g);
        assert_eq!(tf.num.coeffs(), &[0.00082, 0.0059, 0.0019]);
        assert_eq!(tf.den.coeffs(), &[1.0, 0.0]);
    }

    #[test]
    fn pure_p_trims_to_constant() {
        let g = PidGains::new(1.0, 0.0, 0.0).unwrap();
        let tf = pid_tf(&g);
        assert_eq!(tf.num.coeffs(), &[1.0]);
        assert_eq!(tf.den.coeffs(), &[1.0]);
    }

    #[test]
    fn filtered_pid_is_proper() {
        let g = PidGains::new(0.0039, 0.001, 0.002).unwrap();
        let tf = pid_tf_filtered(&g, 0.01);
        assert!(tf.is_proper());
        // DC behaviour still integral: den has trailing zero
        assert_eq!(tf.den.trailing_zeros(), 1);
    }

    #[test]
    fn pole_placement_unit_plant() {
        // FOPTD K=1, T=1, spec zeta=1, omega=1, no derivative:
        // closed-loop char poly = (s+1)^2
        let plant = PlantModel::Foptd(FoptdModel::new(1.0, 1.0, 0.0));
        let spec = LqrSpec::new(1.0, 1.0).unwrap();
        let g = lqr_pid(&plant, &spec, &LqrOptions::default()).unwrap();
        let den = delay_free_closed_loop_den(&plant, &g);
        let lead = den.leading();
        let c: Vec<f64> = den.coeffs().iter().map(|x| x / lead).collect();
        assert_relative_eq!(c[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(c[1], 2.0, epsilon = 1e-6);
        assert_relative_eq!(c[2], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn small_omega_is_infeasible_with_floor() {
        let plant = PlantModel::Foptd(FoptdModel::new(1.0, 1.0, 0.0));
        let spec = LqrSpec::new(1.0, 1e-3).unwrap();
        match lqr_pid(&plant, &spec, &LqrOptions::default()) {
            Err(Error::SpecInfeasible { omega_min }) => {
                assert!(omega_min > 1e-3);
            }
            other => panic!("expected SpecInfeasible, got {other:?}"),
        }
    }

    #[test]
    fn gain_scaling_halves_all_gains() {
        let spec = LqrSpec::new(1.2, 2.0).unwrap();
        let opts = LqrOptions {
            derivative_weight: 0.05,
            third_pole_ratio: 5.0,
        };
        let g1 = lqr_pid(
            &PlantModel::Foptd(FoptdModel::new(2.0, 0.7, 0.1)),
            &spec,
            &opts,
        )
        .unwrap();
        let g2 = lqr_pid(
            &PlantModel::Foptd(FoptdModel::new(4.0, 0.7, 0.1)),
            &spec,
            &opts,
        )
        .unwrap();
        assert_relative_eq!(g1.kp, 2.0 * g2.kp, max_relative = 1e-12);
        assert_relative_eq!(g1.ki, 2.0 * g2.ki, max_relative = 1e-12);
        assert_relative_eq!(g1.kd, 2.0 * g2.kd, max_relative = 1e-12);
    }

    #[test]
    fn soptd_places_all_three_poles() {
        let plant = PlantModel::Soptd(SoptdModel::new(2.0, 1.0, 1.0, 0.0));
        let spec = LqrSpec::new(0.95, 1.1).unwrap();
        let opts = LqrOptions {
            derivative_weight: 0.0,
            third_pole_ratio: 4.0,
        };
        let g = lqr_pid(&plant, &spec, &opts).unwrap();
        let den = delay_free_closed_loop_den(&plant, &g);
        // expected (s^2 + 2*0.95*1.1 s + 1.21)(s + 4*0.95*1.1)
        let zw = 0.95 * 1.1;
        let quad = Polynomial::new(vec![1.0, 2.0 * zw, 1.1 * 1.1]);
        let lin = Polynomial::new(vec![1.0, 4.0 * zw]);
        let want = quad.mul(&lin);
        let lead = den.leading();
        for (got, expect) in den.coeffs().iter().zip(want.coeffs()) {
            assert_relative_eq!(got / lead, expect, max_relative = 1e-9);
        }
    }
}
