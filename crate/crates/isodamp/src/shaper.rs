//! Fractional-order phase shaper `(1 + a s^q)/s^q`: Bode's-integral phase
//! slope, flatness and phase-margin constraints, constrained design, and
//! rational realization of the fractional element.

use crate::error::{Error, Result};
use crate::freq::{freq_response, log_grid};
use crate::optim::{nelder_mead, NmOptions};
use crate::poly::Polynomial;
use crate::scalar::{from_polar, sc, to_f64, Scalar, C};
use crate::tf::{static_gain_integrator_factored, RationalTf};
use nalgebra::ComplexField as _;

/// The fractional shaper pair `{q, a}` with the anchor gain-crossover
/// frequency of the loop it was designed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShaperParams<T: Scalar> {
    pub q: T,
    pub a: T,
    pub omega_gc: T,
}

impl<T: Scalar> PhaseShaperParams<T> {
    /// Validates `0 <= q <= 1`, `a > 0`, `omega_gc > 0`. The gain bound
    /// `1/a <= omega_gc^q` is *not* enforced here (it is a design
    /// constraint, queryable via [`PhaseShaperParams::satisfies_gain_bound`]).
    pub fn new(q: T, a: T, omega_gc: T) -> Result<Self> {
        if q < T::zero() || q > T::one() {
            return Err(Error::InvalidInput("q must lie in [0, 1]".into()));
        }
        if !(a > T::zero()) || !(omega_gc > T::zero()) {
            return Err(Error::InvalidInput("a and omega_gc must be > 0".into()));
        }
        Ok(Self { q, a, omega_gc })
    }

    /// The `1/a <= omega_gc^q` bound.
    pub fn satisfies_gain_bound(&self) -> bool {
        T::one() / self.a <= self.omega_gc.powf(self.q)
    }
}

/// Exact fractional evaluation of the shaper at `j omega`:
/// `(1 + a (j w)^q)/(j w)^q = a + w^{-q} e^{-j q pi/2}`.
pub fn shaper_response<T: Scalar>(p: &PhaseShaperParams<T>, omega: T) -> C<T> {
    let half_pi = sc::<T>(std::f64::consts::FRAC_PI_2);
    let mag = omega.powf(-p.q);
    C::new(p.a, T::zero()) + from_polar(mag, -p.q * half_pi)
}

/// Phase of the exact shaper at `j omega`; continuous in omega, no
/// unwrapping needed (it lives in `(-q pi/2, 0]`).
pub fn shaper_phase<T: Scalar>(p: &PhaseShaperParams<T>, omega: T) -> T {
    shaper_response(p, omega).argument()
}

/// The loop `G = controller x plant` a shaper is designed against.
#[derive(Debug, Clone)]
pub struct LoopContext<T: Scalar> {
    pub g: RationalTf<T>,
    pub omega_gc: T,
    pub phi_m: T,
    pub k_s: T,
}

impl<T: Scalar> LoopContext<T> {
    /// Locate the gain crossover and phase margin of `g` on the default
    /// grid and take the static gain with any integrator factored out.
    pub fn from_loop(g: RationalTf<T>) -> Result<Self> {
        let grid = crate::freq::default_grid::<T>();
        let m = crate::analysis::margins(&g, &grid)?;
        let k_s = static_gain_integrator_factored(&g)?;
        Ok(Self {
            g,
            omega_gc: m.omega_gc,
            phi_m: m.phi_m,
            k_s,
        })
    }
}

/// Bode's-integral estimate of the open-loop phase slope at the crossover:
/// `(phi_m - pi)/w_gc + 2/(pi w_gc) ln|k_s|`, in rad/(rad/s).
pub fn bode_phase_slope<T: Scalar>(ctx: &LoopContext<T>) -> Result<T> {
    if ctx.k_s == T::zero() {
        return Err(Error::InvalidStaticGain);
    }
    let pi = sc::<T>(std::f64::consts::PI);
    Ok((ctx.phi_m - pi) / ctx.omega_gc
        + sc::<T>(2.0) / (pi * ctx.omega_gc) * ctx.k_s.abs().ln())
}

/// Analytic phase-derivative of the shaper at `omega`:
/// `a q w^q sin(q pi/2) / (w (1 + 2 a w^q cos(q pi/2) + a^2 w^{2q}))`.
pub fn shaper_phase_slope<T: Scalar>(p: &PhaseShaperParams<T>, omega: T) -> T {
    let half_pi = sc::<T>(std::f64::consts::FRAC_PI_2);
    let (s, c) = ((p.q * half_pi).sin(), (p.q * half_pi).cos());
    let wq = omega.powf(p.q);
    let two = sc::<T>(2.0);
    p.a * p.q * wq * s / (omega * (T::one() + two * p.a * wq * c + p.a * p.a * wq * wq))
}

/// Flatness residual: Bode slope of the loop plus the shaper's phase slope,
/// evaluated at `omega`. Zero means the composite phase is (estimated) flat.
pub fn flatness_residual<T: Scalar>(
    p: &PhaseShaperParams<T>,
    ctx: &LoopContext<T>,
    omega: T,
) -> Result<T> {
    Ok(bode_phase_slope(ctx)? + shaper_phase_slope(p, omega))
}

fn lag_atan_term<T: Scalar>(p: &PhaseShaperParams<T>, omega: T) -> T {
    let half_pi = sc::<T>(std::f64::consts::FRAC_PI_2);
    let (s, c) = ((p.q * half_pi).sin(), (p.q * half_pi).cos());
    let x = p.a * omega.powf(p.q);
    (x * s / (T::one() + x * c)).atan()
}

/// Net open-loop phase at the anchor crossover after adding the shaper:
/// `phi_m - pi - q pi/2 + atan(a w^q sin(q pi/2)/(1 + a w^q cos(q pi/2)))`.
pub fn phase_after_shaper<T: Scalar>(p: &PhaseShaperParams<T>, ctx: &LoopContext<T>) -> T {
    let pi = sc::<T>(std::f64::consts::PI);
    let half_pi = sc::<T>(std::f64::consts::FRAC_PI_2);
    ctx.phi_m - pi - p.q * half_pi + lag_atan_term(p, ctx.omega_gc)
}

/// Phase-margin constraint value; the design is feasible iff it is <= 0:
/// `phi_md - phi_m + q pi/2 - atan(...)`.
pub fn margin_constraint<T: Scalar>(
    p: &PhaseShaperParams<T>,
    ctx: &LoopContext<T>,
    phi_md: T,
) -> T {
    let half_pi = sc::<T>(std::f64::consts::FRAC_PI_2);
    phi_md - ctx.phi_m + p.q * half_pi - lag_atan_term(p, ctx.omega_gc)
}

/// Shaper design knobs.
#[derive(Debug, Clone, Copy)]
pub struct ShaperDesignConfig<T: Scalar> {
    /// Minimum desired phase margin, radians.
    pub phi_md: T,
    /// Phase-deviation band defining "flat", radians.
    pub flatness_tol: T,
    /// Frequency range the flat band is measured over.
    pub omega_search: (T, T),
    /// Max objective evaluations across the whole design.
    pub budget: usize,
}

impl<T: Scalar> ShaperDesignConfig<T> {
    pub fn defaults_for(omega_gc: T) -> Self {
        Self {
            phi_md: sc(30f64.to_radians()),
            flatness_tol: sc(5f64.to_radians()),
            omega_search: (omega_gc / sc(30.0), omega_gc * sc(30.0)),
            budget: 2000,
        }
    }
}

/// Achieved flat band `[omega_lo, omega_hi]` around the anchor, plus the
/// symmetric half-width `delta` (largest `d` with
/// `[w_gc/(1+d), w_gc (1+d)]` inside the band).
#[derive(Debug, Clone, Copy)]
pub struct FlatBandReport<T: Scalar> {
    pub omega_lo: T,
    pub omega_hi: T,
    pub delta: T,
}

/// Design output: parameters, measured flat band, and the measured phase
/// margin of the exact composite `shaper x G`.
#[derive(Debug, Clone)]
pub struct ShaperDesign<T: Scalar> {
    pub params: PhaseShaperParams<T>,
    pub flat_band: FlatBandReport<T>,
    pub phase_margin_after: T,
    pub residual_at_anchor: T,
}

/// Unwrapped phase and magnitude of G on a grid; reused across objective
/// evaluations.
struct GridResponse<T: Scalar> {
    omegas: Vec<T>,
    g_mag: Vec<T>,
    g_phase: Vec<T>,
    anchor_index: usize,
}

fn grid_response<T: Scalar>(
    g: &RationalTf<T>,
    omega_gc: T,
    search: (T, T),
) -> Result<GridResponse<T>> {
    let (lo, hi) = search;
    if !(lo > T::zero() && lo < omega_gc && omega_gc < hi) {
        return Err(Error::InvalidInput(
            "omega_search must straddle omega_gc".into(),
        ));
    }
    let mut omegas = log_grid(lo, hi, 200);
    // make sure the anchor itself is on the grid
    let pos = omegas.partition_point(|&w| w < omega_gc);
    omegas.insert(pos, omega_gc);
    let resp = freq_response(g, &omegas)?;
    Ok(GridResponse {
        omegas,
        g_mag: resp.iter().map(|s| s.magnitude).collect(),
        g_phase: resp.iter().map(|s| s.phase).collect(),
        anchor_index: pos,
    })
}

fn flat_band_on_grid<T: Scalar>(
    gr: &GridResponse<T>,
    p: &PhaseShaperParams<T>,
    tol: T,
) -> FlatBandReport<T> {
    let n = gr.omegas.len();
    let phase = |i: usize| gr.g_phase[i] + shaper_phase(p, gr.omegas[i]);
    let anchor = phase(gr.anchor_index);
    let mut lo = gr.anchor_index;
    while lo > 0 && (phase(lo - 1) - anchor).abs() <= tol {
        lo -= 1;
    }
    let mut hi = gr.anchor_index;
    while hi + 1 < n && (phase(hi + 1) - anchor).abs() <= tol {
        hi += 1;
    }
    let omega_lo = gr.omegas[lo];
    let omega_hi = gr.omegas[hi];
    let wgc = p.omega_gc;
    let delta = (wgc / omega_lo).min(omega_hi / wgc) - T::one();
    FlatBandReport {
        omega_lo,
        omega_hi,
        delta: delta.max(T::zero()),
    }
}

/// Measured flat band of the exact composite `shaper x G`, anchored at the
/// composite phase at `omega_gc`.
pub fn measured_flat_band<T: Scalar>(
    ctx: &LoopContext<T>,
    p: &PhaseShaperParams<T>,
    tol: T,
    search: (T, T),
) -> Result<FlatBandReport<T>> {
    let gr = grid_response(&ctx.g, ctx.omega_gc, search)?;
    Ok(flat_band_on_grid(&gr, p, tol))
}

/// Gain crossover and phase margin of the exact composite `shaper x G`.
pub fn composite_margins<T: Scalar>(
    ctx: &LoopContext<T>,
    p: &PhaseShaperParams<T>,
) -> Result<(T, T)> {
    let grid = crate::freq::default_grid::<T>();
    let resp = freq_response(&ctx.g, &grid)?;
    let mag: Vec<T> = resp
        .iter()
        .map(|s| s.magnitude * shaper_response(p, s.omega).modulus())
        .collect();
    let phase: Vec<T> = resp
        .iter()
        .map(|s| s.phase + shaper_phase(p, s.omega))
        .collect();
    let pi = sc::<T>(std::f64::consts::PI);
    for i in 0..grid.len() - 1 {
        if (mag[i] - T::one()) * (mag[i + 1] - T::one()) <= T::zero() && mag[i] != mag[i + 1] {
            // bisect in log-omega on the exact composite magnitude
            let mut lo = grid[i];
            let mut hi = grid[i + 1];
            let f = |w: T| -> T {
                let g = ctx.g.response(w).modulus() * shaper_response(p, w).modulus();
                g - T::one()
            };
            let mut flo = f(lo);
            for _ in 0..100 {
                let mid = ((lo.ln() + hi.ln()) / sc::<T>(2.0)).exp();
                let fm = f(mid);
                if (fm > T::zero()) == (flo > T::zero()) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if (hi - lo) / hi < sc(1e-10) {
                    break;
                }
            }
            let wgc = ((lo.ln() + hi.ln()) / sc::<T>(2.0)).exp();
            // unwrapped phase at wgc: nearest grid phase + local increment
            let base = phase[i];
            let delta_rational = {
                let a = ctx.g.response(grid[i]);
                let b = ctx.g.response(wgc);
                let mut d = b.argument() - a.argument();
                while d > pi {
                    d -= sc::<T>(2.0) * pi;
                }
                while d < -pi {
                    d += sc::<T>(2.0) * pi;
                }
                // response() already contains the exact delay phase
                d
            };
            let ph = base - shaper_phase(p, grid[i]) + delta_rational + shaper_phase(p, wgc);
            return Ok((wgc, pi + ph));
        }
    }
    Err(Error::NoCrossover)
}

/// Constrained flat-band maximization over `(q, a)`:
/// maximize the measured symmetric flat-band half-width subject to the
/// gain bound (Eq 22-style), `0 <= q <= 1`, the flatness equality at the
/// anchor (residual within 1e-3 of the slope magnitude), and the
/// phase-margin floor. Augmented-Lagrangian outer loop over Nelder-Mead.
pub fn design_shaper<T: Scalar>(
    ctx: &LoopContext<T>,
    cfg: &ShaperDesignConfig<T>,
) -> Result<ShaperDesign<T>> {
    if ctx.phi_m < cfg.phi_md {
        return Err(Error::DesignInfeasible {
            binding: "phase-margin floor (loop margin already below phi_md)",
        });
    }
    let slope = bode_phase_slope(ctx)?;
    let slope_scale = slope.abs().max(sc(1e-9));
    let gr = grid_response(&ctx.g, ctx.omega_gc, cfg.omega_search)?;
    let wgc = ctx.omega_gc;

    let params_of = |x: &[T]| -> PhaseShaperParams<T> {
        let q = x[0].max(T::zero()).min(T::one());
        let a = x[1].exp();
        PhaseShaperParams { q, a, omega_gc: wgc }
    };
    // constraint values: (h, g1, g2)
    let constraints = |p: &PhaseShaperParams<T>| -> (T, T, T) {
        let h = (slope + shaper_phase_slope(p, wgc)) / slope_scale;
        let g1 = T::one() / p.a - wgc.powf(p.q);
        let g2 = margin_constraint(p, ctx, cfg.phi_md);
        (h, g1, g2)
    };

    let n_starts = 36usize;
    let outer_iters = 4usize;
    let nm_iter = (cfg.budget / (n_starts * outer_iters)).max(40);

    let mut overall: Option<(PhaseShaperParams<T>, T)> = None; // (params, delta)
    for iq in 0..6 {
        for ia in 0..6 {
            let q0 = sc::<T>(0.05 + 0.18 * iq as f64);
            // a in [0.1, 10] x w_gc^-q, log-spaced
            let a0 = wgc.powf(-q0) * sc::<T>(10f64.powf(-1.0 + 2.0 * ia as f64 / 5.0));
            let mut lam_h = T::zero();
            let mut lam1 = T::zero();
            let mut lam2 = T::zero();
            let mut mu = sc::<T>(10.0);
            let mut x = vec![q0, a0.ln()];
            for _ in 0..outer_iters {
                let mut objective = |xv: &[T]| -> T {
                    let p = params_of(xv);
                    let band = flat_band_on_grid(&gr, &p, cfg.flatness_tol);
                    let (h, g1, g2) = constraints(&p);
                    let pen_h = lam_h * h + mu / sc::<T>(2.0) * h * h;
                    let pen = |g: T, lam: T| -> T {
                        let v = (lam + mu * g).max(T::zero());
                        (v * v - lam * lam) / (sc::<T>(2.0) * mu)
                    };
                    // out-of-bounds q handled by clamp in params_of; penalize drift
                    let qdrift = (xv[0] - p.q).abs();
                    -band.delta + pen_h + pen(g1, lam1) + pen(g2, lam2) + qdrift * sc(10.0)
                };
                let opts = NmOptions::<T> {
                    max_iter: nm_iter,
                    ..Default::default()
                };
                let (xn, _, _) = nelder_mead(&mut objective, &x, sc(0.1), &opts);
                x = xn;
                let p = params_of(&x);
                let (h, g1, g2) = constraints(&p);
                lam_h += mu * h;
                lam1 = (lam1 + mu * g1).max(T::zero());
                lam2 = (lam2 + mu * g2).max(T::zero());
                mu *= sc(4.0);
            }
            let p = params_of(&x);
            let (h, g1, g2) = constraints(&p);
            let feasible = h.abs() <= sc(1e-3) && g1 <= sc(1e-6) && g2 <= sc(1e-6);
            if feasible {
                let delta = flat_band_on_grid(&gr, &p, cfg.flatness_tol).delta;
                let better = match &overall {
                    None => true,
                    Some((bp, bd)) => {
                        delta > *bd * sc(1.01)
                            || ((delta - *bd).abs() <= *bd * sc(0.01) && p.q < bp.q)
                    }
                };
                if better {
                    overall = Some((p, delta));
                }
            }
        }
    }

    // q = 0 boundary candidate: nothing to correct if the slope estimate is
    // already ~zero; a is pinned to the gain bound a >= 1.
    {
        let p0 = PhaseShaperParams {
            q: T::zero(),
            a: T::one(),
            omega_gc: wgc,
        };
        let (h, _, g2) = constraints(&p0);
        if h.abs() <= sc(1e-3) && g2 <= sc(1e-6) {
            let delta = flat_band_on_grid(&gr, &p0, cfg.flatness_tol).delta;
            let better = match &overall {
                None => true,
                Some((bp, bd)) => delta > *bd * sc(1.01) || (delta >= *bd * sc(0.99) && p0.q < bp.q),
            };
            if better {
                overall = Some((p0, delta));
            }
        }
    }

    match overall {
        Some((p, _)) => {
            let flat_band = flat_band_on_grid(&gr, &p, cfg.flatness_tol);
            let (_, pm_after) = composite_margins(ctx, &p)?;
            let residual = flatness_residual(&p, ctx, wgc)?;
            Ok(ShaperDesign {
                params: p,
                flat_band,
                phase_margin_after: pm_after,
                residual_at_anchor: residual,
            })
        }
        None => {
            // name the binding constraint at the best-effort flatness point
            let p_best = PhaseShaperParams {
                q: sc(0.5),
                a: wgc.powf(sc::<T>(-0.5)),
                omega_gc: wgc,
            };
            let (h, g1, g2) = constraints(&p_best);
            let binding = if h.abs() > sc(1e-3) {
                "flatness equality (Eq 26 residual)"
            } else if g1 > sc(1e-6) {
                "shaper gain bound (Eq 22)"
            } else if g2 > sc(1e-6) {
                "phase-margin floor (Eq 28)"
            } else {
                "optimizer budget"
            };
            Err(Error::DesignInfeasible { binding })
        }
    }
}

/// Realization accuracy / order selection for [`realize_shaper`].
#[derive(Debug, Clone, Copy)]
pub struct ApproxConfig<T: Scalar> {
    pub order: usize,
    /// When set, the realized shaper's phase is checked against the exact
    /// fractional phase over `[w_gc/3, 3 w_gc]` and an error is raised if
    /// the worst deviation exceeds this bound (degrees).
    pub max_phase_error_deg: Option<T>,
}

impl<T: Scalar> ApproxConfig<T> {
    pub fn order(order: usize) -> Self {
        Self {
            order,
            max_phase_error_deg: None,
        }
    }
}

fn oustaloup_fractional_power<T: Scalar>(q: T, order: usize, wb: T, wh: T) -> RationalTf<T> {
    // recursive pole/zero interlacing approximating s^{+q} on [wb, wh]
    let mu = wh / wb;
    let mut num = Polynomial::one();
    let mut den = Polynomial::one();
    let n = sc::<T>(order as f64);
    for k in 1..=order {
        let kf = sc::<T>(k as f64);
        let half = sc::<T>(0.5);
        let wz = wb * mu.powf((kf - half - q / sc(2.0)) / n);
        let wp = wb * mu.powf((kf - half + q / sc(2.0)) / n);
        num = num.mul(&Polynomial::new(vec![T::one() / wz, T::one()]));
        den = den.mul(&Polynomial::new(vec![T::one() / wp, T::one()]));
    }
    RationalTf {
        num,
        den,
        delay: T::zero(),
    }
}

/// Rational realization of the shaper as `a + R(s)` with `R(s) ~ s^{-q}`.
/// Order 1 uses a frequency-anchored bilinear lag matched to the exact
/// fractional magnitude and phase at the anchor; orders >= 2 use recursive
/// pole-zero interlacing over `[w_gc/100, 100 w_gc]`, gain-anchored at w_gc.
pub fn realize_shaper<T: Scalar>(
    p: &PhaseShaperParams<T>,
    approx: &ApproxConfig<T>,
) -> Result<RationalTf<T>> {
    assert!(approx.order >= 1);
    let wgc = p.omega_gc;
    let tiny = sc::<T>(1e-9);
    let realized = if p.q < tiny {
        RationalTf::constant(T::one() + p.a)
    } else if (T::one() - p.q).abs() < tiny {
        // (a s + 1)/s exactly
        RationalTf {
            num: Polynomial::new(vec![p.a, T::one()]),
            den: Polynomial::new(vec![T::one(), T::zero()]),
            delay: T::zero(),
        }
    } else if approx.order == 1 {
        // lag k (s+z)/(s+p) with maximum lag -q pi/2 exactly at the anchor
        let half_pi = sc::<T>(std::f64::consts::FRAC_PI_2);
        let phi = p.q * half_pi;
        let ratio = (T::one() + phi.sin()) / (T::one() - phi.sin());
        let root = ratio.sqrt();
        let z = wgc * root;
        let pp = wgc / root;
        let mag_z = (wgc * wgc + z * z).sqrt();
        let mag_p = (wgc * wgc + pp * pp).sqrt();
        let k = wgc.powf(-p.q) * mag_p / mag_z;
        let num = Polynomial::new(vec![p.a, p.a * pp]).add(&Polynomial::new(vec![k, k * z]));
        let den = Polynomial::new(vec![T::one(), pp]);
        RationalTf {
            num,
            den,
            delay: T::zero(),
        }
    } else {
        let h = oustaloup_fractional_power(p.q, approx.order, wgc / sc(100.0), wgc * sc(100.0));
        // R = gain / h, |R(j wgc)| = wgc^{-q}
        let val = h.response(wgc).modulus();
        let gain = wgc.powf(-p.q) * val;
        let rnum = h.den.scale(gain);
        let rden = h.num.clone();
        RationalTf {
            num: rden.scale(p.a).add(&rnum),
            den: rden,
            delay: T::zero(),
        }
    };

    if let Some(allowed) = approx.max_phase_error_deg {
        let worst = realization_phase_error_deg(p, &realized, (wgc / sc(3.0), wgc * sc(3.0)));
        if worst > allowed {
            return Err(Error::RealizationAccuracy {
                worst_deviation_deg: to_f64(worst),
                allowed_deg: to_f64(allowed),
            });
        }
    }
    Ok(realized)
}

/// Worst absolute phase deviation (degrees) between the realized shaper and
/// the exact fractional shaper over a frequency band.
pub fn realization_phase_error_deg<T: Scalar>(
    p: &PhaseShaperParams<T>,
    realized: &RationalTf<T>,
    band: (T, T),
) -> T {
    let grid = log_grid(band.0, band.1, 100);
    let deg = sc::<T>(180.0 / std::f64::consts::PI);
    grid.iter()
        .map(|&w| (realized.response(w).argument() - shaper_phase(p, w)).abs() * deg)
        .fold(T::zero(), |a, b| a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn trivial_ctx(phi_m: f64, omega_gc: f64, k_s: f64) -> LoopContext<f64> {
        LoopContext {
            g: RationalTf::from_coeffs(&[k_s], &[1.0, 0.0], 0.0).unwrap(),
            omega_gc,
            phi_m,
            k_s,
        }
    }

    #[test]
    fn slope_direct_substitution() {
        let ctx = trivial_ctx(FRAC_PI_2, 1.0, 1.0);
        assert_relative_eq!(bode_phase_slope(&ctx).unwrap(), -FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn shaper_response_limits() {
        // q = 0: constant 1 + a
        let p0 = PhaseShaperParams::new(0.0, 2.0, 1.0).unwrap();
        let v = shaper_response(&p0, 3.7);
        assert_relative_eq!(v.re, 3.0, epsilon = 1e-12);
        assert_relative_eq!(v.im, 0.0, epsilon = 1e-12);
        // q = 1, a = 1, w = 1: (1 + j)/j = 1 - j
        let p1 = PhaseShaperParams::new(1.0, 1.0, 1.0).unwrap();
        let v = shaper_response(&p1, 1.0);
        assert_relative_eq!(v.re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(v.im, -1.0, epsilon = 1e-12);
        // paper pair at high frequency: tends to a, phase -> 0
        let p = PhaseShaperParams::new(0.6181, 1.3419, 0.387).unwrap();
        let v = shaper_response(&p, 1e9);
        assert_relative_eq!(v.re, 1.3419, max_relative = 1e-5);
        assert!(v.argument().abs() < 1e-5);
    }

    #[test]
    fn q_zero_residual_is_pure_slope() {
        let ctx = trivial_ctx(FRAC_PI_2, 1.0, 2.0);
        let p = PhaseShaperParams::new(0.0, 1.5, 1.0).unwrap();
        assert_relative_eq!(
            flatness_residual(&p, &ctx, 1.0).unwrap(),
            bode_phase_slope(&ctx).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn shaper_slope_matches_finite_difference() {
        // derivative-consistency oracle at assorted (q, a, w)
        let cases = [
            (0.3, 0.5, 0.7),
            (0.6181, 1.3419, 0.387),
            (0.75, 5.0, 0.149),
            (0.9, 2.0, 3.0),
        ];
        for (q, a, w) in cases {
            let p = PhaseShaperParams::new(q, a, 1.0).unwrap();
            let h = w * 1e-6;
            let fd = (shaper_phase(&p, w + h) - shaper_phase(&p, w - h)) / (2.0 * h);
            assert_relative_eq!(shaper_phase_slope(&p, w), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn q_zero_margin_constraint_collapses() {
        let ctx = trivial_ctx(1.0, 1.0, 1.0);
        let p = PhaseShaperParams::new(0.0, 1.0, 1.0).unwrap();
        let phi_md = 0.6;
        assert_relative_eq!(
            margin_constraint(&p, &ctx, phi_md),
            phi_md - 1.0,
            epsilon = 1e-12
        );
        // and the net phase collapses to phi_m - pi
        assert_relative_eq!(phase_after_shaper(&p, &ctx), 1.0 - PI, epsilon = 1e-12);
    }

    #[test]
    fn phase_after_shaper_equals_exact_composite() {
        // agreement oracle: formula vs direct complex evaluation at the anchor
        let g = RationalTf::from_coeffs(&[272.6], &[1.0, 2.0], 0.5).unwrap();
        let c = crate::tune::pid_tf(&crate::tune::PidGains::new(0.0059, 0.0019, 0.00082).unwrap());
        let ctx = LoopContext::from_loop(c.series(&g)).unwrap();
        let p = PhaseShaperParams::new(0.6181, 1.3419, ctx.omega_gc).unwrap();
        let formula = phase_after_shaper(&p, &ctx);
        let grid = crate::freq::log_grid(1e-3, ctx.omega_gc, 400);
        let resp = freq_response(&ctx.g, &grid).unwrap();
        let direct = resp.last().unwrap().phase + shaper_phase(&p, ctx.omega_gc);
        assert_relative_eq!(formula, direct, epsilon = 1e-6);
    }

    #[test]
    fn design_accepts_already_flat_loop() {
        // G = k/s with k = e^{pi^2/4}: Eq-24 slope is ~0 and the true phase
        // is exactly flat (-90 deg everywhere) -> q -> 0 boundary solution
        let k = (PI * PI / 4.0).exp();
        let g = RationalTf::from_coeffs(&[k], &[1.0, 0.0], 0.0).unwrap();
        let ctx = LoopContext::from_loop(g).unwrap();
        assert_relative_eq!(ctx.omega_gc, k, max_relative = 1e-6);
        let cfg = ShaperDesignConfig::defaults_for(ctx.omega_gc);
        let d = design_shaper(&ctx, &cfg).unwrap();
        assert!(d.params.q < 1e-3, "expected q ~ 0, got {}", d.params.q);
        assert!(d.flat_band.delta > 5.0);
    }

    #[test]
    fn design_on_negative_slope_loop_flattens() {
        // a loop with genuinely negative phase slope at crossover:
        // G = 8/(s+1)^3; kv-free static gain 8
        let g = RationalTf::from_coeffs(&[8.0], &[1.0, 3.0, 3.0, 1.0], 0.0).unwrap();
        let ctx = LoopContext::from_loop(g).unwrap();
        let slope = bode_phase_slope(&ctx).unwrap();
        assert!(slope < 0.0);
        let cfg = ShaperDesignConfig::defaults_for(ctx.omega_gc);
        let d = design_shaper(&ctx, &cfg).unwrap();
        assert!(d.params.q > 0.0 && d.params.q <= 1.0);
        // flatness equality honoured at the anchor
        assert!(
            d.residual_at_anchor.abs() <= 1.5e-3 * slope.abs(),
            "residual {} vs slope {}",
            d.residual_at_anchor,
            slope
        );
        // Eq 22 and the margin floor hold
        assert!(d.params.satisfies_gain_bound());
        assert!(d.phase_margin_after >= cfg.phi_md - 1f64.to_radians());
    }

    #[test]
    fn realize_order1_anchor_exactness() {
        // q = 0.5 anchored at w = 1: |R(j1)| = 1 and arg = -45 deg
        let p = PhaseShaperParams::new(0.5, 1.0, 1.0).unwrap();
        let tf = realize_shaper(&p, &ApproxConfig::order(1)).unwrap();
        // subtract the constant a to recover R at the anchor
        let r = tf.response(1.0) - num_complex::Complex::new(1.0, 0.0);
        assert_relative_eq!(r.modulus(), 1.0, max_relative = 5e-3);
        assert_relative_eq!(r.argument().to_degrees(), -45.0, epsilon = 0.5);
    }

    #[test]
    fn realize_q1_is_exact() {
        let p = PhaseShaperParams::new(1.0, 2.0, 1.0).unwrap();
        let tf = realize_shaper(&p, &ApproxConfig::order(1)).unwrap();
        assert_eq!(tf.num.coeffs(), &[2.0, 1.0]);
        assert_eq!(tf.den.coeffs(), &[1.0, 0.0]);
    }

    #[test]
    fn realization_error_shrinks_with_order() {
        let p = PhaseShaperParams::new(0.6181, 1.3419, 0.387).unwrap();
        let band = (p.omega_gc / 3.0, p.omega_gc * 3.0);
        let mut last = f64::INFINITY;
        for order in [1usize, 2, 3, 4, 5] {
            let tf = realize_shaper(&p, &ApproxConfig::order(order)).unwrap();
            let err = realization_phase_error_deg(&p, &tf, band);
            assert!(
                err <= last + 1e-9,
                "order {order}: err {err} > previous {last}"
            );
            last = err;
        }
    }

    #[test]
    fn strict_accuracy_check_rejects_order1_at_paper_q() {
        let p = PhaseShaperParams::new(0.6181, 1.3419, 0.387).unwrap();
        let cfg = ApproxConfig {
            order: 1,
            max_phase_error_deg: Some(3.0),
        };
        assert!(matches!(
            realize_shaper(&p, &cfg),
            Err(Error::RealizationAccuracy { .. })
        ));
    }
}
