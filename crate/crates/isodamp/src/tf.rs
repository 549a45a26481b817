//! Rational transfer functions with an optional pure time delay.

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::{from_polar, jw, sc, to_f64, Scalar, C};
use nalgebra::ComplexField as _;

/// `num(s)/den(s) * e^{-delay * s}`. The delay is carried symbolically and
/// only rationalized (Pade) when a simulation needs it; frequency-domain
/// evaluation always uses the exact delay phase.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTf<T: Scalar> {
    pub num: Polynomial<T>,
    pub den: Polynomial<T>,
    pub delay: T,
}

/// Outcome of a DC-gain query; `1/s` has infinite static gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DcGain<T: Scalar> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> DcGain<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            DcGain::Finite(v) => Some(v),
            DcGain::Infinite => None,
        }
    }
}

impl<T: Scalar> RationalTf<T> {
    pub fn new(num: Polynomial<T>, den: Polynomial<T>, delay: T) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("denominator is identically zero".into()));
        }
        if delay < T::zero() || !delay.is_finite() {
            return Err(Error::InvalidInput("delay must be finite and >= 0".into()));
        }
        Ok(Self { num, den, delay })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64], delay: f64) -> Result<Self> {
        Self::new(
            Polynomial::new(num.iter().map(|&c| sc(c)).collect()),
            Polynomial::new(den.iter().map(|&c| sc(c)).collect()),
            sc(delay),
        )
    }

    /// The unity transfer function.
    pub fn unity() -> Self {
        Self {
            num: Polynomial::one(),
            den: Polynomial::one(),
            delay: T::zero(),
        }
    }

    pub fn constant(k: T) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::one(),
            delay: T::zero(),
        }
    }

    pub fn is_proper(&self) -> bool {
        self.num.degree() <= self.den.degree()
    }

    /// deg(den) - deg(num); negative for improper systems.
    pub fn relative_degree(&self) -> isize {
        self.den.degree() as isize - self.num.degree() as isize
    }

    /// Series connection; numerators and denominators multiply, delays add.
    /// No pole/zero cancellation is attempted (see [`RationalTf::minreal`]).
    pub fn series(&self, other: &Self) -> Self {
        Self {
            num: self.num.mul(&other.num),
            den: self.den.mul(&other.den),
            delay: self.delay + other.delay,
        }
    }

    /// Multiply the gain by `k`.
    pub fn scale_gain(&self, k: T) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
            delay: self.delay,
        }
    }

    /// Evaluate at an arbitrary complex point including the delay factor.
    pub fn eval(&self, s: C<T>) -> C<T> {
        let rational = self.num.eval(s) / self.den.eval(s);
        if self.delay == T::zero() {
            rational
        } else {
            rational * (-s * C::new(self.delay, T::zero())).exp()
        }
    }

    /// Frequency-point evaluation `G(j omega)` with exact delay.
    pub fn response(&self, omega: T) -> C<T> {
        let s = jw(omega);
        let rational = self.num.eval(s) / self.den.eval(s);
        rational * from_polar(T::one(), -omega * self.delay)
    }

    /// `num(0)/den(0)`; infinite when the denominator alone vanishes at 0.
    pub fn dc_gain(&self) -> Result<DcGain<T>> {
        let n0 = self.num.constant_term();
        let d0 = self.den.constant_term();
        let tol = sc::<T>(crate::poly::TRIM_TOL);
        match (n0.abs() < tol, d0.abs() < tol) {
            (false, false) => Ok(DcGain::Finite(n0 / d0)),
            (false, true) => Ok(DcGain::Infinite),
            (true, false) => Ok(DcGain::Finite(n0 / d0)),
            (true, true) => Err(Error::IndeterminateDcGain),
        }
    }

    pub fn poles(&self) -> Vec<C<T>> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Vec<C<T>> {
        self.num.roots()
    }

    /// All poles strictly in the open left half-plane.
    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.re < T::zero())
    }

    pub fn max_pole_re(&self) -> Option<T> {
        self.poles()
            .iter()
            .map(|p| p.re)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: T| a.max(r))))
    }

    /// Non-minimum phase: some zero has strictly positive real part.
    pub fn is_non_minimum_phase(&self) -> bool {
        self.zeros().iter().any(|z| z.re > T::zero())
    }

    /// Cancel numerator/denominator root pairs closer than `tol`
    /// (relative to the root magnitude, absolute below magnitude 1).
    pub fn minreal(&self, tol: T) -> Self {
        let mut zeros = self.num.roots();
        let mut poles = self.den.roots();
        let mut kept_zeros = Vec::new();
        'outer: while let Some(z) = zeros.pop() {
            for i in 0..poles.len() {
                let p = poles[i];
                // relative to root magnitude, absolute below magnitude 1
                let scale = T::one().max(z.modulus());
                let dist = (z - p).modulus();
                if dist <= tol * scale {
                    poles.swap_remove(i);
                    continue 'outer;
                }
            }
            kept_zeros.push(z);
        }
        let num = Polynomial::from_roots(self.num.leading(), &kept_zeros);
        let den = Polynomial::from_roots(self.den.leading(), &poles);
        Self {
            num,
            den,
            delay: self.delay,
        }
    }

    /// Reflect unstable poles across the imaginary axis. Preserves |G(jw)|
    /// up to an all-pass factor and keeps the DC gain magnitude; used to
    /// build stable surrogates of ill-identified models.
    pub fn reflect_unstable_poles(&self) -> Self {
        let reflected: Vec<C<T>> = self
            .den
            .roots()
            .into_iter()
            .map(|p| {
                if p.re > T::zero() {
                    C::new(-p.re, p.im)
                } else {
                    p
                }
            })
            .collect();
        let den = Polynomial::from_roots(self.den.leading(), &reflected);
        Self {
            num: self.num.clone(),
            den,
            delay: self.delay,
        }
    }
}

/// Pade approximation of `e^{-Ls}` of the given diagonal order.
/// Order 1 is `(1 - Ls/2)/(1 + Ls/2)`; `L = 0` returns unity.
pub fn pade_delay<T: Scalar>(delay: T, order: usize) -> RationalTf<T> {
    assert!(order >= 1, "pade order must be >= 1");
    if delay == T::zero() {
        return RationalTf::unity();
    }
    let n = order;
    // c_k = (2n-k)! n! / ((2n)! k! (n-k)!), computed in f64 (orders are small)
    let fact = |v: usize| -> f64 { (1..=v).map(|x| x as f64).product::<f64>().max(1.0) };
    let mut num = vec![T::zero(); n + 1];
    let mut den = vec![T::zero(); n + 1];
    for k in 0..=n {
        let c = sc::<T>(fact(2 * n - k) * fact(n) / (fact(2 * n) * fact(k) * fact(n - k)));
        let dk = delay.powi(k as i32);
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        // descending powers: coefficient of s^k sits at index n-k
        num[n - k] = c * dk * sign;
        den[n - k] = c * dk;
    }
    RationalTf {
        num: Polynomial::new(num),
        den: Polynomial::new(den),
        delay: T::zero(),
    }
}

/// Replace the symbolic delay by its Pade rationalization.
pub fn rationalize_delay<T: Scalar>(tf: &RationalTf<T>, order: usize) -> RationalTf<T> {
    if tf.delay == T::zero() {
        return tf.clone();
    }
    let p = pade_delay(tf.delay, order);
    RationalTf {
        num: tf.num.mul(&p.num),
        den: tf.den.mul(&p.den),
        delay: T::zero(),
    }
}

/// Static gain with any pure integrators factored out:
/// for `G(s) = G'(s)/s^p` with `G'(0)` finite, returns `G'(0)`.
pub fn static_gain_integrator_factored<T: Scalar>(tf: &RationalTf<T>) -> Result<T> {
    let p_den = tf.den.trailing_zeros();
    let p_num = tf.num.trailing_zeros();
    if p_num > p_den {
        // net differentiator: static gain is exactly zero
        return Err(Error::InvalidStaticGain);
    }
    let den = tf.den.strip_trailing_zeros(p_den);
    let num = tf.num.strip_trailing_zeros(p_num);
    let k = num.constant_term() / den.constant_term();
    if !k.is_finite() || k == T::zero() {
        return Err(Error::InvalidStaticGain);
    }
    Ok(k)
}

impl<T: Scalar> std::fmt::Display for RationalTf<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let fmt_poly = |p: &Polynomial<T>| -> String {
            let deg = p.degree();
            p.coeffs()
                .iter()
                .enumerate()
                .filter(|(_, c)| c.abs() > sc(0.0))
                .map(|(i, c)| {
                    let pow = deg - i;
                    match pow {
                        0 => format!("{:.6}", to_f64(*c)),
                        1 => format!("{:.6} s", to_f64(*c)),
                        _ => format!("{:.6} s^{}", to_f64(*c), pow),
                    }
                })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        write!(f, "({}) / ({})", fmt_poly(&self.num), fmt_poly(&self.den))?;
        if self.delay > T::zero() {
            write!(f, " * e^(-{} s)", to_f64(self.delay))?;
        }
        Ok(())
    }
}
