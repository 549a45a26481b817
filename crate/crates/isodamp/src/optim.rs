//! Small derivative-free optimizers used by the reduction and shaper
//! modules: Nelder-Mead simplex descent and an augmented-Lagrangian
//! wrapper for nonlinear constraints.

use crate::scalar::{sc, Scalar};

pub struct NmOptions<T> {
    pub max_iter: usize,
    pub xtol: T,
    pub ftol: T,
}

impl<T: Scalar> Default for NmOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 300,
            xtol: sc(1e-9),
            ftol: sc(1e-12),
        }
    }
}

/// Nelder-Mead minimization from `x0`; returns `(x_best, f_best, evals)`.
pub fn nelder_mead<T: Scalar>(
    f: &mut dyn FnMut(&[T]) -> T,
    x0: &[T],
    initial_step: T,
    opts: &NmOptions<T>,
) -> (Vec<T>, T, usize) {
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (sc::<T>(1.0), sc::<T>(2.0), sc::<T>(0.5), sc::<T>(0.5));
    let mut evals = 0usize;
    let mut eval = |x: &[T], evals: &mut usize| -> T {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            sc(1e100)
        }
    };

    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    let fx0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += initial_step;
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    for _ in 0..opts.max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = (worst - best).abs();
        let xspread = (0..n)
            .map(|i| (simplex[n].0[i] - simplex[0].0[i]).abs())
            .fold(T::zero(), |a, b| a.max(b));
        if spread < opts.ftol && xspread < opts.xtol {
            break;
        }
        // centroid of all but worst
        let mut centroid = vec![T::zero(); n];
        for (x, _) in simplex.iter().take(n) {
            for i in 0..n {
                centroid[i] += x[i];
            }
        }
        for c in centroid.iter_mut() {
            *c /= sc(n as f64);
        }
        let reflect: Vec<T> = (0..n)
            .map(|i| centroid[i] + alpha * (centroid[i] - simplex[n].0[i]))
            .collect();
        let fr = eval(&reflect, &mut evals);
        if fr < simplex[0].1 {
            let expand: Vec<T> = (0..n)
                .map(|i| centroid[i] + gamma * (reflect[i] - centroid[i]))
                .collect();
            let fe = eval(&expand, &mut evals);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract: Vec<T> = (0..n)
                .map(|i| centroid[i] + rho * (simplex[n].0[i] - centroid[i]))
                .collect();
            let fc = eval(&contract, &mut evals);
            if fc < simplex[n].1 {
                simplex[n] = (contract, fc);
            } else {
                // shrink toward best
                let best_x = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    for i in 0..n {
                        v.0[i] = best_x[i] + sigma * (v.0[i] - best_x[i]);
                    }
                    v.1 = eval(&v.0.clone(), &mut evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    (simplex[0].0.clone(), simplex[0].1, evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_2d() {
        let mut f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NmOptions {
            max_iter: 2000,
            ..Default::default()
        };
        let (x, fx, _) = nelder_mead(&mut f, &[-1.2, 1.0], 0.5, &opts);
        assert!(fx < 1e-10, "fx = {fx}, x = {x:?}");
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4);
    }
}
