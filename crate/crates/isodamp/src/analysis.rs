//! Loop-level analysis: margins, sensitivity curves, closed-loop
//! simulation, transient metrics, iso-damping sweeps and the step-back
//! scenario driver.

use crate::error::{Error, Result};
use crate::fixtures::FixtureCatalog;
use crate::freq::{freq_response, FreqSample};
use crate::reduce::{FoptdModel, SoptdModel};
use crate::scalar::{sc, to_f64, Scalar};
use crate::sim::{simulate, TimeSeries};
use crate::ss::to_state_space;
use crate::tf::{rationalize_delay, RationalTf};
use crate::tune::{pid_tf, pid_tf_filtered, PidGains};
use nalgebra::ComplexField as _;

/// Stability margins of an open loop.
#[derive(Debug, Clone)]
pub struct Margins<T: Scalar> {
    /// Lowest-frequency gain crossover.
    pub omega_gc: T,
    /// Phase margin at `omega_gc`, radians.
    pub phi_m: T,
    /// Gain margin in dB at the phase crossover; `None` when the phase
    /// never crosses -180 degrees on the grid (infinite margin).
    pub gain_margin_db: Option<T>,
    pub omega_pc: Option<T>,
    /// Every gain crossover found on the grid, ascending.
    pub crossings: Vec<T>,
}

fn bisect_log<T: Scalar>(mut lo: T, mut hi: T, mut flo: T, f: impl Fn(T) -> T) -> T {
    for _ in 0..200 {
        let mid = ((lo.ln() + hi.ln()) / sc::<T>(2.0)).exp();
        let fm = f(mid);
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo) <= sc::<T>(1e-8) * hi {
            break;
        }
    }
    ((lo.ln() + hi.ln()) / sc::<T>(2.0)).exp()
}

/// Gain/phase margins of `G` on an analysis grid. The crossover is refined
/// by bisection between bracketing grid points; when several crossings
/// exist the lowest-frequency one is reported and all are listed.
pub fn margins<T: Scalar>(g: &RationalTf<T>, grid: &[T]) -> Result<Margins<T>> {
    let resp = freq_response(g, grid)?;
    let mut crossings = Vec::new();
    for i in 0..resp.len() - 1 {
        let f0 = resp[i].magnitude - T::one();
        let f1 = resp[i + 1].magnitude - T::one();
        if f0 == T::zero() {
            crossings.push(resp[i].omega);
        } else if f0 * f1 < T::zero() {
            let w = bisect_log(resp[i].omega, resp[i + 1].omega, f0, |w| {
                g.response(w).modulus() - T::one()
            });
            crossings.push(w);
        }
    }
    if crossings.is_empty() {
        return Err(Error::NoCrossover);
    }
    let omega_gc = crossings[0];
    let pi = sc::<T>(std::f64::consts::PI);
    let phase_at = |w: T, anchor: usize| -> T {
        // unwrapped phase: grid anchor plus a principal-value increment
        let base = resp[anchor].phase;
        let a = g.response(resp[anchor].omega);
        let b = g.response(w);
        let mut d = b.argument() - a.argument();
        while d > pi {
            d -= pi + pi;
        }
        while d < -pi {
            d += pi + pi;
        }
        base + d
    };
    let anchor = grid.partition_point(|&w| w < omega_gc).min(grid.len() - 1);
    let phi = phase_at(omega_gc, anchor.saturating_sub(1).max(0));
    let phi_m = pi + phi;

    // phase crossover: first unwrapped crossing of -180 deg
    let mut omega_pc = None;
    let mut gm_db = None;
    for i in 0..resp.len() - 1 {
        let p0 = resp[i].phase + pi;
        let p1 = resp[i + 1].phase + pi;
        if p0 > T::zero() && p1 <= T::zero() {
            // log-linear interpolation on the dense grid
            let t = p0 / (p0 - p1);
            let w = (resp[i].omega.ln() + (resp[i + 1].omega.ln() - resp[i].omega.ln()) * t).exp();
            let mag = g.response(w).modulus();
            omega_pc = Some(w);
            gm_db = Some(-sc::<T>(20.0) * mag.log10());
            break;
        }
    }
    Ok(Margins {
        omega_gc,
        phi_m,
        gain_margin_db: gm_db,
        omega_pc,
        crossings,
    })
}

/// Margins from precomputed open-loop samples (no refinement beyond
/// log-linear interpolation between grid points).
pub fn margins_from_samples<T: Scalar>(samples: &[FreqSample<T>]) -> Result<Margins<T>> {
    let pi = sc::<T>(std::f64::consts::PI);
    let mut crossings = Vec::new();
    let mut phi_at_first = None;
    for i in 0..samples.len() - 1 {
        let f0 = samples[i].magnitude - T::one();
        let f1 = samples[i + 1].magnitude - T::one();
        if f0 * f1 <= T::zero() && f0 != f1 {
            let t = f0 / (f0 - f1);
            let w =
                (samples[i].omega.ln() + (samples[i + 1].omega.ln() - samples[i].omega.ln()) * t).exp();
            crossings.push(w);
            if phi_at_first.is_none() {
                let ph = samples[i].phase + (samples[i + 1].phase - samples[i].phase) * t;
                phi_at_first = Some(ph);
            }
        }
    }
    let omega_gc = *crossings.first().ok_or(Error::NoCrossover)?;
    let mut omega_pc = None;
    let mut gm_db = None;
    for i in 0..samples.len() - 1 {
        let p0 = samples[i].phase + pi;
        let p1 = samples[i + 1].phase + pi;
        if p0 > T::zero() && p1 <= T::zero() {
            let t = p0 / (p0 - p1);
            let w =
                (samples[i].omega.ln() + (samples[i + 1].omega.ln() - samples[i].omega.ln()) * t).exp();
            let mag = samples[i].magnitude + (samples[i + 1].magnitude - samples[i].magnitude) * t;
            omega_pc = Some(w);
            gm_db = Some(-sc::<T>(20.0) * mag.log10());
            break;
        }
    }
    Ok(Margins {
        omega_gc,
        phi_m: pi + phi_at_first.unwrap(),
        gain_margin_db: gm_db,
        omega_pc,
        crossings,
    })
}

/// Pointwise sensitivity magnitudes of the unity loop.
#[derive(Debug, Clone)]
pub struct SensitivityCurves<T: Scalar> {
    pub omega: Vec<T>,
    pub s_mag: Vec<T>,
    pub t_mag: Vec<T>,
}

/// `S = 1/(1+G)`, `T = G/(1+G)` computed pointwise from open-loop samples.
pub fn sensitivity_curves<T: Scalar>(open_loop: &[FreqSample<T>]) -> Result<SensitivityCurves<T>> {
    let one = num_complex::Complex::new(T::one(), T::zero());
    let mut s_mag = Vec::with_capacity(open_loop.len());
    let mut t_mag = Vec::with_capacity(open_loop.len());
    for s in open_loop {
        let g = s.as_complex();
        let d = one + g;
        if d.modulus() < sc(1e-12) {
            return Err(Error::ClosedLoopSingularity {
                omega: to_f64(s.omega),
            });
        }
        s_mag.push((one / d).modulus());
        t_mag.push((g / d).modulus());
    }
    Ok(SensitivityCurves {
        omega: open_loop.iter().map(|s| s.omega).collect(),
        s_mag,
        t_mag,
    })
}

/// Where a load disturbance enters the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturbanceInjection {
    PlantInput,
    PlantOutput,
}

/// Closed-loop simulation knobs.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig<T: Scalar> {
    pub pade_order: usize,
    /// Derivative filter time constant used when a simulated channel would
    /// otherwise be improper.
    pub tau_f: T,
    pub injection: DisturbanceInjection,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            pade_order: 1,
            tau_f: sc(0.01),
            injection: DisturbanceInjection::PlantInput,
        }
    }
}

/// Plant output and PID output of one closed-loop run.
#[derive(Debug, Clone)]
pub struct ClosedLoopResponse<T: Scalar> {
    pub output: TimeSeries<T>,
    /// Output of the PID block (the shaper sits between it and the plant).
    pub controller_output: TimeSeries<T>,
    /// Plant input (after the shaper): the rod command.
    pub rod_command: TimeSeries<T>,
}

fn channel_sim<T: Scalar>(
    num: crate::poly::Polynomial<T>,
    den: crate::poly::Polynomial<T>,
    input: &TimeSeries<T>,
) -> Result<TimeSeries<T>> {
    let tf = RationalTf::new(num, den, T::zero())?;
    let ss = to_state_space(&tf)?;
    simulate(&ss, input)
}

/// Unity-negative-feedback simulation with forward path
/// `controller -> shaper -> plant`, delay Pade-rationalized. Every channel
/// is ZOH-exact. Errors with [`Error::ImproperSystem`] if a channel is
/// improper (use [`closed_loop_sim_pid`] for automatic derivative filtering).
pub fn closed_loop_sim<T: Scalar>(
    plant: &RationalTf<T>,
    controller: &RationalTf<T>,
    shaper: Option<&RationalTf<T>>,
    setpoint: &TimeSeries<T>,
    disturbance: Option<&TimeSeries<T>>,
    cfg: &SimConfig<T>,
) -> Result<ClosedLoopResponse<T>> {
    let plant_r = rationalize_delay(plant, cfg.pade_order);
    let unity = RationalTf::unity();
    let sh = shaper.unwrap_or(&unity);
    // F = sh * C * plant; common closed-loop denominator F.den + F.num
    let f_num = sh.num.mul(&controller.num).mul(&plant_r.num);
    let f_den = sh.den.mul(&controller.den).mul(&plant_r.den);
    let closed_den = f_den.add(&f_num);

    // y/r = F/(1+F)
    let y = channel_sim(f_num.clone(), closed_den.clone(), setpoint)?;
    // u/r = C/(1+F) = C.num * sh.den * plant.den / closed_den
    let u_num = controller.num.mul(&sh.den).mul(&plant_r.den);
    let u = channel_sim(u_num, closed_den.clone(), setpoint)?;
    // rod/r = (sh*C)/(1+F)
    let rod_num = sh.num.mul(&controller.num).mul(&plant_r.den);
    let rod = channel_sim(rod_num, closed_den.clone(), setpoint)?;

    let (mut y, mut u, mut rod) = (y, u, rod);
    if let Some(d) = disturbance {
        if d.len() != setpoint.len() || (d.dt - setpoint.dt).abs() > sc(1e-12) {
            return Err(Error::InvalidInput(
                "disturbance must share the setpoint sampling".into(),
            ));
        }
        let (yd_num, ud_num, rodd_num) = match cfg.injection {
            DisturbanceInjection::PlantInput => (
                // y/d = plant/(1+F)
                plant_r.num.mul(&sh.den).mul(&controller.den),
                // u/d = -C*plant/(1+F)
                controller.num.mul(&plant_r.num).mul(&sh.den).scale(-T::one()),
                // rod/d = d + sh*C*(-y/d) => transfer (F.den - sh*C*plant)/... ; rod = d - sh*C*y
                f_den.sub(&sh.num.mul(&controller.num).mul(&plant_r.num)),
            ),
            DisturbanceInjection::PlantOutput => (
                // y/d = 1/(1+F)
                f_den.clone(),
                controller.num.mul(&sh.den).mul(&plant_r.den).scale(-T::one()),
                sh.num.mul(&controller.num).mul(&plant_r.den).scale(-T::one()),
            ),
        };
        let yd = channel_sim(yd_num, closed_den.clone(), d)?;
        let ud = channel_sim(ud_num, closed_den.clone(), d)?;
        let rodd = channel_sim(rodd_num, closed_den, d)?;
        for i in 0..y.values.len() {
            y.values[i] += yd.values[i];
            u.values[i] += ud.values[i];
            rod.values[i] += rodd.values[i];
        }
    }
    Ok(ClosedLoopResponse {
        output: y,
        controller_output: u,
        rod_command: rod,
    })
}

/// PID front-end for [`closed_loop_sim`]: starts from the unfiltered PID
/// and falls back to the filtered form (`cfg.tau_f`) when any channel is
/// improper, which is always the case for a nonzero derivative gain.
pub fn closed_loop_sim_pid<T: Scalar>(
    plant: &RationalTf<T>,
    gains: &PidGains<T>,
    shaper: Option<&RationalTf<T>>,
    setpoint: &TimeSeries<T>,
    disturbance: Option<&TimeSeries<T>>,
    cfg: &SimConfig<T>,
) -> Result<ClosedLoopResponse<T>> {
    let c = pid_tf(gains);
    match closed_loop_sim(plant, &c, shaper, setpoint, disturbance, cfg) {
        Err(Error::ImproperSystem) => {
            let cf = pid_tf_filtered(gains, cfg.tau_f);
            closed_loop_sim(plant, &cf, shaper, setpoint, disturbance, cfg)
        }
        other => other,
    }
}

/// Step-response quality numbers; percentages are relative to the
/// commanded step magnitude.
#[derive(Debug, Clone, Copy)]
pub struct TransientMetrics<T: Scalar> {
    pub undershoot_pct: T,
    pub overshoot_pct: T,
    pub rise_time_10_90: T,
    pub settling_time_2pct: T,
    pub steady_state_error_pct: T,
}

/// Metrics of a step response from `y_initial` commanded to `y_final`.
/// For a step-down, "undershoot" is the dip below the commanded final
/// value; roles mirror for a step-up.
pub fn transient_metrics<T: Scalar>(
    y: &TimeSeries<T>,
    y_initial: T,
    y_final: T,
) -> Result<TransientMetrics<T>> {
    let step = y_final - y_initial;
    if step.abs() == T::zero() {
        return Err(Error::InvalidInput("step magnitude must be nonzero".into()));
    }
    let hundred = sc::<T>(100.0);
    let mag = step.abs();
    let mut y_min = y.values[0];
    let mut y_max = y.values[0];
    for &v in &y.values {
        y_min = y_min.min(v);
        y_max = y_max.max(v);
    }
    let (undershoot, overshoot) = if step < T::zero() {
        (
            (y_final - y_min).max(T::zero()) / mag * hundred,
            (y_max - y_initial).max(T::zero()) / mag * hundred,
        )
    } else {
        (
            (y_initial - y_min).max(T::zero()) / mag * hundred,
            (y_max - y_final).max(T::zero()) / mag * hundred,
        )
    };

    // 10% -> 90% of the commanded change, toward the target
    let level = |frac: f64| y_initial + step * sc::<T>(frac);
    let crossed = |v: T, lvl: T| {
        if step > T::zero() {
            v >= lvl
        } else {
            v <= lvl
        }
    };
    let cross_time = |lvl: T| -> Option<T> {
        for i in 0..y.len() {
            if crossed(y.values[i], lvl) {
                if i == 0 {
                    return Some(y.time(0));
                }
                let a = y.values[i - 1];
                let b = y.values[i];
                let t = if b == a { T::zero() } else { (lvl - a) / (b - a) };
                return Some(y.time(i - 1) + y.dt * t);
            }
        }
        None
    };
    let inf = sc::<T>(f64::INFINITY);
    let rise = match (cross_time(level(0.1)), cross_time(level(0.9))) {
        (Some(t10), Some(t90)) => (t90 - t10).max(T::zero()),
        _ => inf,
    };

    let tol = mag * sc::<T>(0.02);
    let mut settle = inf;
    if (y.values[y.len() - 1] - y_final).abs() <= tol {
        let mut k = y.len() - 1;
        while k > 0 && (y.values[k - 1] - y_final).abs() <= tol {
            k -= 1;
        }
        settle = y.time(k);
    }

    let tail = (y.len() as f64 * 0.05).ceil() as usize;
    let tail = tail.max(1);
    let mut acc = T::zero();
    for &v in &y.values[y.len() - tail..] {
        acc += v;
    }
    let sse = (acc / sc(tail as f64) - y_final).abs() / mag * hundred;

    Ok(TransientMetrics {
        undershoot_pct: undershoot,
        overshoot_pct: overshoot,
        rise_time_10_90: rise,
        settling_time_2pct: settle,
        steady_state_error_pct: sse,
    })
}

/// One cell of an iso-damping sweep.
#[derive(Debug, Clone)]
pub struct SweepCell<T: Scalar> {
    pub plant_index: usize,
    pub multiplier: T,
    pub metrics: Option<TransientMetrics<T>>,
    pub diverged: bool,
}

/// Result table of [`iso_damping_sweep`], cells in input order.
#[derive(Debug, Clone)]
pub struct SweepTable<T: Scalar> {
    pub cells: Vec<SweepCell<T>>,
}

impl<T: Scalar> SweepTable<T> {
    /// (min, max) undershoot over converged cells.
    pub fn undershoot_range(&self) -> Option<(T, T)> {
        let mut range: Option<(T, T)> = None;
        for c in self.cells.iter().filter_map(|c| c.metrics.as_ref()) {
            let u = c.undershoot_pct;
            range = Some(match range {
                None => (u, u),
                Some((lo, hi)) => (lo.min(u), hi.max(u)),
            });
        }
        range
    }

    pub fn any_diverged(&self) -> bool {
        self.cells.iter().any(|c| c.diverged)
    }
}

/// Simulate every plant x multiplier combination against a fixed
/// controller + shaper under a unit step-down command (measured on the
/// normalized deviation step 0 -> 1). Divergent cells are recorded and the
/// sweep continues.
pub fn iso_damping_sweep<T: Scalar>(
    plants: &[RationalTf<T>],
    gains: &PidGains<T>,
    shaper: Option<&RationalTf<T>>,
    multipliers: &[T],
    dt: T,
    horizon: T,
    cfg: &SimConfig<T>,
) -> Result<SweepTable<T>> {
    if plants.is_empty() || multipliers.is_empty() {
        return Err(Error::InvalidInput("plants and multipliers must be nonempty".into()));
    }
    let n = (to_f64(horizon / dt).round() as usize).max(2);
    let setpoint = TimeSeries::unit_step(dt, n);
    let mut cells = Vec::new();
    for (pi, plant) in plants.iter().enumerate() {
        for &m in multipliers {
            let scaled = plant.scale_gain(m);
            let cell = match closed_loop_sim_pid(&scaled, gains, shaper, &setpoint, None, cfg) {
                Ok(resp) => {
                    let metrics = transient_metrics(&resp.output, T::zero(), T::one())?;
                    SweepCell {
                        plant_index: pi,
                        multiplier: m,
                        metrics: Some(metrics),
                        diverged: false,
                    }
                }
                Err(Error::Divergence { .. }) => SweepCell {
                    plant_index: pi,
                    multiplier: m,
                    metrics: None,
                    diverged: true,
                },
                Err(e) => return Err(e),
            };
            cells.push(cell);
        }
    }
    Ok(SweepTable { cells })
}

/// Truncated-ramp rod-drop command.
#[derive(Debug, Clone, Copy)]
pub struct RodDropProfile<T: Scalar> {
    /// Fraction of total drop commanded (0.3 for the 30% case).
    pub drop_fraction: T,
    pub ramp_duration: T,
    pub start_time: T,
}

impl<T: Scalar> Default for RodDropProfile<T> {
    fn default() -> Self {
        Self {
            drop_fraction: sc(0.3),
            ramp_duration: sc(3.0),
            start_time: sc(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantFamily {
    Foptd,
    Soptd,
}

/// Step-back scenario configuration.
#[derive(Debug, Clone, Copy)]
pub struct StepbackConfig {
    pub dt: f64,
    pub horizon: f64,
    pub sim: SimConfig<f64>,
    /// Interpolate the plant gain for initial powers between the fixture
    /// anchors (70/80/90/100%).
    pub interpolate_gain: bool,
}

impl Default for StepbackConfig {
    fn default() -> Self {
        Self {
            dt: 0.005,
            horizon: 30.0,
            sim: SimConfig::default(),
            interpolate_gain: false,
        }
    }
}

/// Step-back run output: absolute power trajectory plus metrics of the
/// deviation step.
#[derive(Debug, Clone)]
pub struct StepbackResult {
    pub power: TimeSeries<f64>,
    pub rod_command: TimeSeries<f64>,
    pub controller_output: TimeSeries<f64>,
    pub metrics: TransientMetrics<f64>,
    pub plant: RationalTf<f64>,
}

fn foptd_for_power(catalog: &FixtureCatalog, power: f64, interpolate: bool) -> Result<FoptdModel<f64>> {
    let anchors = [
        (100.0, "G100_foptd"),
        (90.0, "G90_foptd"),
        (80.0, "G80_foptd"),
        (70.0, "G70_foptd"),
    ];
    for (p, name) in anchors {
        if (power - p).abs() < 1e-9 {
            return catalog.get_foptd(name);
        }
    }
    if !interpolate {
        return Err(Error::UnknownOperatingPoint { power_pct: power });
    }
    let lo = catalog.get_foptd("G70_foptd")?;
    let hi = catalog.get_foptd("G100_foptd")?;
    let t = ((power - 70.0) / 30.0).clamp(0.0, 1.0);
    Ok(FoptdModel::new(lo.k + (hi.k - lo.k) * t, lo.t, lo.l))
}

fn soptd_for_power(catalog: &FixtureCatalog, power: f64, interpolate: bool) -> Result<SoptdModel<f64>> {
    let anchors = [
        (100.0, "G100_soptd"),
        (90.0, "G90_soptd"),
        (80.0, "G80_soptd"),
        (70.0, "G70_soptd"),
    ];
    for (p, name) in anchors {
        if (power - p).abs() < 1e-9 {
            return catalog.get_soptd(name);
        }
    }
    if !interpolate {
        return Err(Error::UnknownOperatingPoint { power_pct: power });
    }
    let lo = catalog.get_soptd("G70_soptd")?;
    let hi = catalog.get_soptd("G100_soptd")?;
    let t = ((power - 70.0) / 30.0).clamp(0.0, 1.0);
    Ok(SoptdModel::new(
        lo.k + (hi.k - lo.k) * t,
        lo.zeta,
        lo.omega_n,
        lo.l,
    ))
}

/// Run the truncated-ramp step-back against the fixture plant matching the
/// initial power level. The setpoint commands an absolute power reduction
/// of `drop_fraction * initial_power`; the returned trajectory is the
/// absolute power (initial power plus deviation).
pub fn stepback_scenario(
    catalog: &FixtureCatalog,
    family: PlantFamily,
    gains: &PidGains<f64>,
    shaper: Option<&RationalTf<f64>>,
    profile: &RodDropProfile<f64>,
    initial_power_pct: f64,
    cfg: &StepbackConfig,
) -> Result<StepbackResult> {
    if !(0.0..=1.0).contains(&profile.drop_fraction) {
        return Err(Error::InvalidInput("drop_fraction must lie in [0, 1]".into()));
    }
    let plant = match family {
        PlantFamily::Foptd => foptd_for_power(catalog, initial_power_pct, cfg.interpolate_gain)?.to_tf(),
        PlantFamily::Soptd => soptd_for_power(catalog, initial_power_pct, cfg.interpolate_gain)?.to_tf(),
    };
    let n = (cfg.horizon / cfg.dt).round() as usize;
    let target = -profile.drop_fraction * initial_power_pct;
    let setpoint = TimeSeries::truncated_ramp(
        target,
        profile.start_time,
        profile.ramp_duration,
        cfg.dt,
        n,
    );
    let resp = closed_loop_sim_pid(&plant, gains, shaper, &setpoint, None, &cfg.sim)?;
    let metrics = if profile.drop_fraction == 0.0 {
        TransientMetrics {
            undershoot_pct: 0.0,
            overshoot_pct: 0.0,
            rise_time_10_90: f64::INFINITY,
            settling_time_2pct: 0.0,
            steady_state_error_pct: 0.0,
        }
    } else {
        transient_metrics(&resp.output, 0.0, target)?
    };
    Ok(StepbackResult {
        power: resp.output.map(|v| v + initial_power_pct),
        rod_command: resp.rod_command,
        controller_output: resp.controller_output,
        metrics,
        plant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrator_margins_analytic() {
        // G = 1/s: w_gc = 1, phi_m = 90 deg, no phase crossover
        let g = RationalTf::from_coeffs(&[1.0], &[1.0, 0.0], 0.0).unwrap();
        let grid = crate::freq::default_grid::<f64>();
        let m = margins(&g, &grid).unwrap();
        assert_relative_eq!(m.omega_gc, 1.0, max_relative = 1e-8);
        assert_relative_eq!(m.phi_m, std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        assert!(m.gain_margin_db.is_none());
    }

    #[test]
    fn no_crossover_error() {
        let g = RationalTf::from_coeffs(&[0.1], &[1.0, 1.0], 0.0).unwrap();
        let grid = crate::freq::default_grid::<f64>();
        assert!(matches!(margins(&g, &grid), Err(Error::NoCrossover)));
    }

    #[test]
    fn s_plus_t_is_one_exactly() {
        let g = RationalTf::from_coeffs(&[272.6], &[1.0, 2.0], 0.5).unwrap();
        let grid = crate::freq::log_grid(0.01_f64, 100.0, 50);
        let samples = freq_response(&g, &grid).unwrap();
        for s in &samples {
            let gg = s.as_complex();
            let one = num_complex::Complex::new(1.0, 0.0);
            let sum = one / (one + gg) + gg / (one + gg);
            assert!((sum - one).norm() < 1e-12);
        }
        let curves = sensitivity_curves(&samples).unwrap();
        assert_eq!(curves.s_mag.len(), samples.len());
    }

    #[test]
    fn static_loop_algebra() {
        // plant = 1, P controller kp = 1, unit step: y = 0.5
        let plant = RationalTf::constant(1.0);
        let gains = PidGains::new(1.0, 0.0, 0.0).unwrap();
        let sp = TimeSeries::unit_step(0.1, 50);
        let resp =
            closed_loop_sim_pid(&plant, &gains, None, &sp, None, &SimConfig::default()).unwrap();
        for &v in &resp.output.values {
            assert_relative_eq!(v, 0.5, epsilon = 1e-12);
        }
        // controller output carries the other half
        for &v in &resp.controller_output.values {
            assert_relative_eq!(v, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn transient_metrics_first_order_rise() {
        // y = 1 - e^{-t}: overshoot 0, rise = ln 9
        let dt = 0.001;
        let y = TimeSeries::new(
            0.0,
            dt,
            (0..20000).map(|i| 1.0 - (-(i as f64) * dt).exp()).collect(),
        );
        let m = transient_metrics(&y, 0.0, 1.0).unwrap();
        assert_relative_eq!(m.overshoot_pct, 0.0);
        assert_relative_eq!(m.rise_time_10_90, 9f64.ln(), epsilon = 1e-3);
        assert!(m.settling_time_2pct >= m.rise_time_10_90);
    }

    #[test]
    fn stepdown_undershoot_definition() {
        // command 1 -> 0; trace dips to -0.05: undershoot 5%
        let mut vals = vec![1.0, 0.5, -0.05, 0.01];
        vals.extend(std::iter::repeat(0.0).take(96));
        let y = TimeSeries::new(0.0, 0.1, vals);
        let m = transient_metrics(&y, 1.0, 0.0).unwrap();
        assert_relative_eq!(m.undershoot_pct, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn monotone_stepdown_has_zero_undershoot() {
        let y = TimeSeries::new(0.0, 0.1, (0..100).map(|i| 1.0 - i as f64 / 99.0).collect());
        let m = transient_metrics(&y, 1.0, 0.0).unwrap();
        assert_relative_eq!(m.undershoot_pct, 0.0);
    }

    #[test]
    fn sweep_single_cell_matches_direct_composition() {
        let plant = FoptdModel::new(2.0, 1.0, 0.1).to_tf();
        let gains = PidGains::new(0.5, 0.3, 0.0).unwrap();
        let cfg = SimConfig::default();
        let table =
            iso_damping_sweep(&[plant.clone()], &gains, None, &[1.0], 0.01, 20.0, &cfg).unwrap();
        assert_eq!(table.cells.len(), 1);
        let sp = TimeSeries::unit_step(0.01, 2000);
        let direct = closed_loop_sim_pid(&plant, &gains, None, &sp, None, &cfg).unwrap();
        let dm = transient_metrics(&direct.output, 0.0, 1.0).unwrap();
        let cm = table.cells[0].metrics.unwrap();
        assert_relative_eq!(cm.undershoot_pct, dm.undershoot_pct, epsilon = 1e-12);
        assert_relative_eq!(cm.rise_time_10_90, dm.rise_time_10_90, epsilon = 1e-12);
    }
}
