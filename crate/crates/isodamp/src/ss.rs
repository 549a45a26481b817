//! SISO state-space form, ZOH discretization, and the matrix functions
//! backing them (exponential from nalgebra, logarithm via inverse scaling
//! and squaring with Denman-Beavers square roots).

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::{sc, to_f64, Scalar};
use crate::tf::RationalTf;
use nalgebra::{DMatrix, DVector, RowDVector};

/// `x' = A x + B u`, `y = C x + D u` (continuous) or the same maps in
/// discrete time, depending on context.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace<T: Scalar> {
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    pub c: RowDVector<T>,
    pub d: T,
}

impl<T: Scalar> StateSpace<T> {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
}

/// Controllable canonical realization of a proper, delay-free transfer
/// function. Errors: improper numerator, or a delay that has not been
/// Pade-rationalized.
pub fn to_state_space<T: Scalar>(tf: &RationalTf<T>) -> Result<StateSpace<T>> {
    if tf.delay > T::zero() {
        return Err(Error::DelayNotRationalized {
            delay: to_f64(tf.delay),
        });
    }
    if !tf.is_proper() {
        return Err(Error::ImproperSystem);
    }
    let n = tf.den.degree();
    let lead = tf.den.leading();
    let den: Vec<T> = tf.den.coeffs().iter().map(|&c| c / lead).collect();
    let mut num = vec![T::zero(); n + 1];
    let offset = n + 1 - (tf.num.degree() + 1);
    for (i, &c) in tf.num.coeffs().iter().enumerate() {
        num[offset + i] = c / lead;
    }
    let d = num[0];
    if n == 0 {
        return Ok(StateSpace {
            a: DMatrix::zeros(0, 0),
            b: DVector::zeros(0),
            c: RowDVector::zeros(0),
            d,
        });
    }
    let mut a = DMatrix::<T>::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = T::one();
    }
    for j in 0..n {
        a[(n - 1, j)] = -den[n - j];
    }
    let mut b = DVector::<T>::zeros(n);
    b[n - 1] = T::one();
    let mut c = RowDVector::<T>::zeros(n);
    for j in 0..n {
        // coefficient of s^j in num minus d * same in den
        c[j] = num[n - j] - d * den[n - j];
    }
    Ok(StateSpace { a, b, c, d })
}

/// Exact ZOH discretization over one step: returns `(A_d, B_d)` with
/// `A_d = e^{A dt}` and `B_d = \int_0^{dt} e^{A t} dt B`, both read off one
/// augmented matrix exponential.
pub fn zoh_discretize<T: Scalar>(a: &DMatrix<T>, b: &DVector<T>, dt: T) -> (DMatrix<T>, DVector<T>) {
    let n = a.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), DVector::zeros(0));
    }
    let mut m = DMatrix::<T>::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = a[(i, j)] * dt;
        }
        m[(i, n)] = b[i] * dt;
    }
    let e = m.exp();
    let ad = e.view((0, 0), (n, n)).into_owned();
    let bd = DVector::from_fn(n, |i, _| e[(i, n)]);
    (ad, bd)
}

/// `\int_0^{dt} e^{A t} dt` via the same augmented-exponential trick.
pub fn exp_integral<T: Scalar>(a: &DMatrix<T>, dt: T) -> DMatrix<T> {
    let n = a.nrows();
    let mut m = DMatrix::<T>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = a[(i, j)] * dt;
        }
        m[(i, n + i)] = dt;
    }
    let e = m.exp();
    e.view((0, n), (n, n)).into_owned()
}

/// Principal matrix logarithm by inverse scaling and squaring:
/// repeated Denman-Beavers square roots until `||X - I||` is small, then a
/// Gauss-Legendre (Pade) evaluation of `log(I + Y)`.
///
/// Valid for matrices with no eigenvalues on the closed negative real axis;
/// callers are expected to have checked that (see `sysid::d2c_zoh`).
pub fn matrix_log<T: Scalar>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let eye = DMatrix::<T>::identity(n, n);
    let mut x = a.clone();
    let mut squarings = 0u32;
    while (&x - &eye).norm() > sc(0.25) && squarings < 50 {
        x = denman_beavers_sqrt(&x)?;
        squarings += 1;
    }
    let y = &x - &eye;
    // 8-point Gauss-Legendre on [0,1]: log(I+Y) = sum w_j Y (I + t_j Y)^{-1}
    const NODES: [(f64, f64); 8] = [
        (0.019855071751231856, 0.05061426814518813),
        (0.10166676129318664, 0.11119051722668723),
        (0.2372337950418355, 0.15685332293894364),
        (0.40828267875217505, 0.18134189168918099),
        (0.5917173212478249, 0.18134189168918099),
        (0.7627662049581645, 0.15685332293894364),
        (0.8983332387068134, 0.11119051722668723),
        (0.9801449282487681, 0.05061426814518813),
    ];
    let mut log_x = DMatrix::<T>::zeros(n, n);
    for (t, w) in NODES {
        let m = &eye + &y * sc::<T>(t);
        let inv = m.lu().try_inverse().ok_or(Error::InvalidInput(
            "matrix logarithm: singular Pade factor".into(),
        ))?;
        log_x += (&y * inv) * sc::<T>(w);
    }
    Ok(log_x * sc::<T>(2f64.powi(squarings as i32)))
}

fn denman_beavers_sqrt<T: Scalar>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<T>::identity(n, n);
    let half = sc::<T>(0.5);
    for _ in 0..100 {
        let y_inv = y.clone().lu().try_inverse().ok_or(Error::InvalidInput(
            "matrix square root: singular iterate".into(),
        ))?;
        let z_inv = z.clone().lu().try_inverse().ok_or(Error::InvalidInput(
            "matrix square root: singular iterate".into(),
        ))?;
        let yn = (&y + z_inv) * half;
        let zn = (&z + y_inv) * half;
        let delta = (&yn - &y).norm();
        y = yn;
        z = zn;
        if delta < sc(1e-15) * (T::one() + y.norm()) {
            break;
        }
    }
    Ok(y)
}

/// Characteristic polynomial `det(sI - M)` by the Faddeev-LeVerrier
/// recursion; returns descending coefficients, leading 1.
pub fn char_poly<T: Scalar>(m: &DMatrix<T>) -> Polynomial<T> {
    let n = m.nrows();
    let mut coeffs = vec![T::one()];
    let mut mk = DMatrix::<T>::zeros(n, n);
    let eye = DMatrix::<T>::identity(n, n);
    for k in 1..=n {
        mk = m * (&mk + &eye * *coeffs.last().unwrap());
        let ck = -mk.trace() / sc::<T>(k as f64);
        coeffs.push(ck);
    }
    // keep exact length: do not trim (leading coeff is 1)
    Polynomial::new(coeffs)
}

/// SISO transfer function of a state-space model, using
/// `C (sI-A)^{-1} B + D = [det(sI - A + BC) - det(sI - A)]/det(sI - A) + D`.
pub fn ss_to_tf<T: Scalar>(ss: &StateSpace<T>) -> RationalTf<T> {
    let n = ss.order();
    if n == 0 {
        return RationalTf::constant(ss.d);
    }
    let den = char_poly(&ss.a);
    let bc = &ss.b * &ss.c;
    let shifted = char_poly(&(&ss.a - bc));
    let num = shifted.sub(&den).add(&den.scale(ss.d));
    RationalTf {
        num,
        den,
        delay: T::zero(),
    }
}
