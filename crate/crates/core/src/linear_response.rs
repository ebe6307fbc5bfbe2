//! First-order response of steady-state observables to a weak perturbation
//! `W -> W + chi f(t) F`.

use nalgebra::{DMatrix, DVector};

use crate::bounds::{cmax, ratio, BoundId, BoundReport, CmaxMode};
use crate::correlation::{correlation_derivative, two_point};
use crate::error::{Error, Result};
use crate::markov::{
    check_time, propagator, propagator_integral, stationarity_residual, steady_state,
    ProbVector, RateMatrix, ScoreVector,
};

/// `|W Pst|_inf` above which a baseline is rejected as non-stationary.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-8;
/// The oracle's step must satisfy `dt <= ORACLE_STEP_FACTOR / max R`.
pub const ORACLE_STEP_FACTOR: f64 = 1e-3;

/// Time profile `f(t)` of the perturbation.
#[derive(Debug, Clone, PartialEq)]
pub enum Drive {
    /// Rectangle of unit area on `[0, width]`; a delta sequence as
    /// `width -> 0`.
    Pulse { width: f64 },
    /// Heaviside step switched on at `t = 0`.
    Step,
    /// Piecewise-linear through `(time, value)` samples, zero outside them.
    Sampled(Vec<(f64, f64)>),
}

impl Drive {
    /// Exact integral of `f` over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Drive::Pulse { width } => (b.min(*width) - a.max(0.0)).max(0.0) / width,
            Drive::Step => (b - a.max(0.0)).max(0.0),
            Drive::Sampled(pts) => {
                let mut total = 0.0;
                for seg in pts.windows(2) {
                    let ((x0, y0), (x1, y1)) = (seg[0], seg[1]);
                    let lo = a.max(x0);
                    let hi = b.min(x1);
                    if hi <= lo || x1 <= x0 {
                        continue;
                    }
                    let at = |x: f64| y0 + (y1 - y0) * (x - x0) / (x1 - x0);
                    total += 0.5 * (at(lo) + at(hi)) * (hi - lo);
                }
                total
            }
        }
    }

    /// Value at `t`, taking the right limit at jumps.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Drive::Pulse { width } => {
                if (0.0..*width).contains(&t) {
                    1.0 / width
                } else {
                    0.0
                }
            }
            Drive::Step => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Drive::Sampled(pts) => {
                let i = pts.partition_point(|&(x, _)| x <= t);
                if i == 0 || i == pts.len() {
                    return if i == pts.len() && pts.last().is_some_and(|&(x, _)| x == t) {
                        pts[i - 1].1
                    } else {
                        0.0
                    };
                }
                let ((x0, y0), (x1, y1)) = (pts[i - 1], pts[i]);
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Drive::Pulse { width } if !(*width > 0.0 && width.is_finite()) => {
                Err(Error::NonPositiveTime(*width))
            }
            Drive::Sampled(pts) => {
                if pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return Err(Error::NonFinite("sampled drive"));
                }
                if pts.windows(2).any(|w| w[1].0 < w[0].0) {
                    return Err(Error::TimesNotSorted);
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// A weak perturbation `chi f(t) F` of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub f: DMatrix<f64>,
    pub chi: f64,
    pub drive: Drive,
}

impl Perturbation {
    pub fn new(f: DMatrix<f64>, chi: f64, drive: Drive) -> Result<Self> {
        if !f.is_square() {
            return Err(Error::BadDimension(format!("F is {}x{}", f.nrows(), f.ncols())));
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("perturbation matrix"));
        }
        if chi == 0.0 || !chi.is_finite() {
            return Err(Error::ZeroStrength);
        }
        drive.validate()?;
        Ok(Self { f, chi, drive })
    }

    /// `F = W diag(S)`, the perturbation conjugate to the score `S`.
    pub fn conjugate(w: &RateMatrix, s: &ScoreVector, chi: f64, drive: Drive) -> Result<Self> {
        w.check_dim(s.len())?;
        Self::new(conjugate_matrix(w, s), chi, drive)
    }
}

pub fn conjugate_matrix(w: &RateMatrix, s: &ScoreVector) -> DMatrix<f64> {
    w.matrix() * s.diag()
}

fn check_steady(w: &RateMatrix, pst: &ProbVector) -> Result<()> {
    w.check_dim(pst.len())?;
    let r = stationarity_residual(w, pst);
    if r > STEADY_RESIDUAL_TOL {
        return Err(Error::NotSteadyState(r));
    }
    Ok(())
}

fn check_f(w: &RateMatrix, f: &DMatrix<f64>) -> Result<()> {
    if f.nrows() != w.n() || f.ncols() != w.n() {
        return Err(Error::DimensionMismatch { expected: w.n(), got: f.nrows().max(f.ncols()) });
    }
    Ok(())
}

/// `R_G(t) = 1 G e^{Wt} F Pst` for `t >= 0`, zero before the kick.
pub fn response_function(
    w: &RateMatrix,
    pst: &ProbVector,
    f: &DMatrix<f64>,
    g: &ScoreVector,
    t: f64,
) -> Result<f64> {
    check_steady(w, pst)?;
    check_f(w, f)?;
    w.check_dim(g.len())?;
    if t.is_nan() {
        return Err(Error::NonFinite("time"));
    }
    if t < 0.0 {
        return Ok(0.0);
    }
    let v = propagator(w, t)? * (f * pst.as_vector());
    Ok(g.as_vector().dot(&v))
}

/// Shift of `<T>` after a delta kick of strength `chi` along `W diag(S)`:
/// `chi dC/dt`.
pub fn pulse_shift(
    w: &RateMatrix,
    pst: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    chi: f64,
    t: f64,
) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::NonPositiveTime(t));
    }
    check_steady(w, pst)?;
    Ok(chi * correlation_derivative(w, pst, s, t_score, t)?)
}

/// Shift of `<T>` after a step of strength `chi` along `W diag(S)`:
/// `chi (C(t) - C(0))`.
pub fn step_shift(
    w: &RateMatrix,
    pst: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    chi: f64,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    check_steady(w, pst)?;
    Ok(chi * (two_point(w, pst, s, t_score, t)? - two_point(w, pst, s, t_score, 0.0)?))
}

/// `|Delta T_pulse(t)| <= |chi| C_max sqrt(a / t)`.
pub fn bound_pulse(
    w: &RateMatrix,
    pst: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    chi: f64,
    t: f64,
    mode: CmaxMode,
) -> Result<BoundReport> {
    let lhs = pulse_shift(w, pst, s, t_score, chi, t)?.abs();
    let a = crate::bounds::activity_rate(w, pst)?;
    let rhs = chi.abs() * cmax(s, t_score, mode) * (a / t).sqrt();
    Ok(BoundReport {
        bound_id: BoundId::PulseEq11,
        t1: t,
        t2: t,
        lhs,
        rhs,
        ratio: ratio(lhs, rhs),
        in_validity_domain: true,
        geodesic_arg: None,
        cmax_mode: mode,
        companion_rhs: None,
    })
}

/// `|Delta T_step(t)| <= 2 |chi| C_max sin(sqrt(a t))`, falling back to
/// `2 |chi| C_max` once `sqrt(a t) > pi/2`.
pub fn bound_step(
    w: &RateMatrix,
    pst: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    chi: f64,
    t: f64,
    mode: CmaxMode,
) -> Result<BoundReport> {
    let lhs = step_shift(w, pst, s, t_score, chi, t)?.abs();
    let a = crate::bounds::activity_rate(w, pst)?;
    let arg = (a * t).sqrt();
    let in_domain = arg <= std::f64::consts::FRAC_PI_2;
    let k = 2.0 * chi.abs() * cmax(s, t_score, mode);
    let rhs = if in_domain { k * arg.sin() } else { k };
    Ok(BoundReport {
        bound_id: BoundId::StepEq12,
        t1: 0.0,
        t2: t,
        lhs,
        rhs,
        ratio: ratio(lhs, rhs),
        in_validity_domain: in_domain,
        geodesic_arg: Some(arg),
        cmax_mode: mode,
        companion_rhs: None,
    })
}

/// Integrates `dP/dt = (W + chi f(t) F) P` from the steady state of `W` with
/// fixed-step RK4 and returns `(t_k, P(t_k))` at every step, `t_0 = 0`.
///
/// Within each step the drive is replaced by its exact mean over the step,
/// so rectangle edges that fall on grid points are resolved without error.
pub fn perturbed_oracle(
    w: &RateMatrix,
    f: &DMatrix<f64>,
    chi: f64,
    drive: &Drive,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, DVector<f64>)>> {
    check_f(w, f)?;
    drive.validate()?;
    check_time(t_end)?;
    if !chi.is_finite() {
        return Err(Error::NonFinite("chi"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::NonPositiveTime(dt));
    }
    let max_r = w.max_escape_rate();
    let limit = if max_r > 0.0 { ORACLE_STEP_FACTOR / max_r } else { f64::INFINITY };
    if dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }
    let mut p = steady_state(w)?.as_vector().clone();
    let steps = (t_end / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, p.clone()));
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let t1 = (k + 1) as f64 * dt;
        let a = w.matrix() + f * (chi * drive.integral(t0, t1) / (t1 - t0));
        let k1 = &a * &p;
        let k2 = &a * (&p + &k1 * (0.5 * dt));
        let k3 = &a * (&p + &k2 * (0.5 * dt));
        let k4 = &a * (&p + &k3 * dt);
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("oracle state"));
        }
        out.push((t1, p.clone()));
    }
    Ok(out)
}

/// First-order correction `chi P_1(t) = chi int_0^t e^{W(t-s)} F Pst f(s) ds`.
///
/// Step and pulse drives use closed forms through the propagator integral;
/// sampled drives use the trapezoidal rule on a grid of spacing close to
/// `dt`.
pub fn linear_prediction(
    w: &RateMatrix,
    pst: &ProbVector,
    f: &DMatrix<f64>,
    chi: f64,
    drive: &Drive,
    t: f64,
    dt: f64,
) -> Result<DVector<f64>> {
    check_steady(w, pst)?;
    check_f(w, f)?;
    drive.validate()?;
    check_time(t)?;
    let fp = f * pst.as_vector();
    let p1 = match drive {
        Drive::Step => propagator_integral(w, t)? * fp,
        Drive::Pulse { width } => {
            // int_0^{min(t,w)} e^{W(t-s)} ds / w = (I(t) - I(t - min(t,w))) / w
            let on = t.min(*width);
            (propagator_integral(w, t)? - propagator_integral(w, t - on)?) * fp / *width
        }
        Drive::Sampled(_) => {
            if t == 0.0 {
                return Ok(DVector::zeros(w.n()));
            }
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::NonPositiveTime(dt));
            }
            let m = (t / dt).ceil().max(1.0) as usize;
            let h = t / m as f64;
            let step = propagator(w, h)?;
            // v_k = e^{W k h} F Pst, weighted by f(t - k h)
            let mut v = fp;
            let mut acc = DVector::zeros(w.n());
            for k in 0..=m {
                let weight = if k == 0 || k == m { 0.5 } else { 1.0 };
                acc += &v * (weight * drive.value(t - k as f64 * h));
                v = &step * v;
            }
            acc * h
        }
    };
    Ok(p1 * chi)
}

/// One row of a response sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseRow {
    pub t: f64,
    pub shift: f64,
    pub bound_rhs: f64,
    pub ratio: f64,
    pub in_domain: bool,
}

pub const RESPONSE_CSV_HEADER: &str = "t,shift,bound_rhs,ratio,in_domain";

impl ResponseRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            crate::fmt_real(self.t),
            crate::fmt_real(self.shift),
            crate::fmt_real(self.bound_rhs),
            crate::fmt_real(self.ratio),
            self.in_domain
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    Pulse,
    Step,
}

/// Signed shift and bound at each time. Pulse sweeps skip `t = 0`, where
/// the bound is undefined.
#[allow(clippy::too_many_arguments)]
pub fn response_sweep(
    w: &RateMatrix,
    pst: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    chi: f64,
    kind: ResponseKind,
    times: &[f64],
    mode: CmaxMode,
) -> Result<Vec<ResponseRow>> {
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let (shift, r) = match kind {
            ResponseKind::Pulse if t == 0.0 => continue,
            ResponseKind::Pulse => (
                pulse_shift(w, pst, s, t_score, chi, t)?,
                bound_pulse(w, pst, s, t_score, chi, t, mode)?,
            ),
            ResponseKind::Step => (
                step_shift(w, pst, s, t_score, chi, t)?,
                bound_step(w, pst, s, t_score, chi, t, mode)?,
            ),
        };
        rows.push(ResponseRow {
            t,
            shift,
            bound_rhs: r.rhs,
            ratio: r.ratio,
            in_domain: r.in_validity_domain,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{random_model, symmetric_model};

    fn pm1() -> ScoreVector {
        ScoreVector::new(vec![-1.0, 1.0]).unwrap()
    }

    #[test]
    fn response_function_closed_form_and_causality() {
        let w = symmetric_model();
        let u = ProbVector::uniform(2);
        let f = conjugate_matrix(&w, &pm1());
        assert_eq!(response_function(&w, &u, &f, &pm1(), -0.5).unwrap(), 0.0);
        for &t in &[0.0, 0.3, 1.0, 4.0] {
            let r = response_function(&w, &u, &f, &pm1(), t).unwrap();
            assert!((r + 2.0 * (-2.0 * t).exp()).abs() < 1e-13);
        }
        let p = ProbVector::new(vec![0.9, 0.1]).unwrap();
        assert!(matches!(
            response_function(&w, &p, &f, &pm1(), 1.0),
            Err(Error::NotSteadyState(_))
        ));
    }

    #[test]
    fn fluctuation_dissipation_on_random_models() {
        for seed in 0..10 {
            let m = random_model(3, seed).unwrap();
            let pst = steady_state(&m.w).unwrap();
            let f = conjugate_matrix(&m.w, &m.s);
            for &t in &[0.0, 0.1, 1.0, 3.0] {
                let r = response_function(&m.w, &pst, &f, &m.s, t).unwrap();
                let d = correlation_derivative(&m.w, &pst, &m.s, &m.s, t).unwrap();
                assert!((r - d).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn shifts_closed_forms() {
        let w = symmetric_model();
        let u = ProbVector::uniform(2);
        for &t in &[0.2, 1.0, 3.0] {
            let p = pulse_shift(&w, &u, &pm1(), &pm1(), 0.01, t).unwrap();
            assert!((p + 0.02 * (-2.0 * t).exp()).abs() < 1e-15);
            let s = step_shift(&w, &u, &pm1(), &pm1(), 0.01, t).unwrap();
            assert!((s - 0.01 * ((-2.0 * t).exp() - 1.0)).abs() < 1e-15);
        }
        assert_eq!(step_shift(&w, &u, &pm1(), &pm1(), 0.01, 0.0).unwrap(), 0.0);
        let far = step_shift(&w, &u, &pm1(), &pm1(), 0.01, 50.0).unwrap();
        assert!((far + 0.01).abs() < 1e-15);
        assert!(matches!(
            pulse_shift(&w, &u, &pm1(), &pm1(), 0.01, 0.0),
            Err(Error::NonPositiveTime(_))
        ));
        let frozen = RateMatrix::zeros(2).unwrap();
        assert_eq!(pulse_shift(&frozen, &u, &pm1(), &pm1(), 0.01, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn bounds_on_symmetric_model() {
        let w = symmetric_model();
        let u = ProbVector::uniform(2);
        let r = bound_pulse(&w, &u, &pm1(), &pm1(), 0.01, 1.0, CmaxMode::Standard).unwrap();
        assert!((r.lhs - 0.02 * (-2.0_f64).exp()).abs() < 1e-15);
        assert!((r.rhs - 0.01).abs() < 1e-15);
        let r = bound_step(&w, &u, &pm1(), &pm1(), 0.01, 1.0, CmaxMode::Standard).unwrap();
        assert!((r.rhs - 0.02 * 1.0_f64.sin()).abs() < 1e-15);
        assert!(r.passes() && r.in_validity_domain);
        let r = bound_step(&w, &u, &pm1(), &pm1(), 0.01, 4.0, CmaxMode::Standard).unwrap();
        assert!(!r.in_validity_domain);
        assert_eq!(r.rhs, 0.02);
        assert!((r.ratio - 0.49).abs() < 0.02);
        let r = bound_step(&w, &u, &pm1(), &pm1(), 0.01, 0.0, CmaxMode::Standard).unwrap();
        assert_eq!((r.lhs, r.rhs, r.ratio), (0.0, 0.0, 0.0));
    }

    #[test]
    fn perturbation_rejects_zero_strength() {
        let w = symmetric_model();
        assert_eq!(
            Perturbation::conjugate(&w, &pm1(), 0.0, Drive::Step),
            Err(Error::ZeroStrength)
        );
        assert!(Perturbation::conjugate(&w, &pm1(), 0.01, Drive::Pulse { width: 0.0 }).is_err());
        let p = Perturbation::conjugate(&w, &pm1(), 0.01, Drive::Step).unwrap();
        // columns of W diag(S) sum to zero
        for c in 0..2 {
            assert!(p.f.column(c).sum().abs() < 1e-15);
        }
    }

    #[test]
    fn drive_integrals() {
        let pulse = Drive::Pulse { width: 0.5 };
        assert_eq!(pulse.integral(-1.0, 2.0), 1.0);
        assert_eq!(pulse.integral(0.25, 2.0), 0.5);
        assert_eq!(Drive::Step.integral(-1.0, 2.0), 2.0);
        let ramp = Drive::Sampled(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
        assert!((ramp.integral(-5.0, 5.0) - 1.0).abs() < 1e-15);
        assert!((ramp.integral(0.5, 1.5) - 0.75).abs() < 1e-15);
        assert_eq!(ramp.value(1.5), 0.5);
        assert_eq!(ramp.value(3.0), 0.0);
        assert_eq!(ramp.value(2.0), 0.0);
    }

    #[test]
    fn oracle_zero_chi_stays_put() {
        let m = random_model(3, 1).unwrap();
        let f = conjugate_matrix(&m.w, &m.s);
        let dt = 1e-3 / m.w.max_escape_rate();
        let series = perturbed_oracle(&m.w, &f, 0.0, &Drive::Step, 0.5, dt).unwrap();
        let pst = steady_state(&m.w).unwrap();
        for (_, p) in &series {
            assert!((p - pst.as_vector()).amax() < 1e-12);
        }
        assert!(matches!(
            perturbed_oracle(&m.w, &f, 0.01, &Drive::Step, 1.0, 1.0),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn oracle_matches_step_shift() {
        let w = symmetric_model();
        let f = conjugate_matrix(&w, &pm1());
        let series = perturbed_oracle(&w, &f, 0.01, &Drive::Step, 1.0, 1e-3).unwrap();
        let (t, p) = series.last().unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        let shift = pm1().as_vector().dot(p);
        let want = step_shift(&w, &ProbVector::uniform(2), &pm1(), &pm1(), 0.01, 1.0).unwrap();
        assert!((shift - want).abs() < 1e-3);
    }

    #[test]
    fn narrow_rectangle_approaches_pulse_shift() {
        let w = symmetric_model();
        let u = ProbVector::uniform(2);
        let f = conjugate_matrix(&w, &pm1());
        let width = 1e-4;
        let series =
            perturbed_oracle(&w, &f, 0.01, &Drive::Pulse { width }, 1.0, width).unwrap();
        for (t, p) in series.iter().skip(1000).step_by(900) {
            let shift = pm1().as_vector().dot(p);
            let want = pulse_shift(&w, &u, &pm1(), &pm1(), 0.01, *t).unwrap();
            assert!(((shift - want) / want).abs() < 1e-3, "t={t}");
        }
    }

    #[test]
    fn sampled_prediction_matches_step_closed_form() {
        let m = random_model(3, 5).unwrap();
        let pst = steady_state(&m.w).unwrap();
        let f = conjugate_matrix(&m.w, &m.s);
        let flat = Drive::Sampled(vec![(0.0, 1.0), (10.0, 1.0)]);
        let a = linear_prediction(&m.w, &pst, &f, 0.01, &flat, 2.0, 1e-3).unwrap();
        let b = linear_prediction(&m.w, &pst, &f, 0.01, &Drive::Step, 2.0, 1e-3).unwrap();
        assert!((a - b).amax() < 1e-9);
    }

    #[test]
    fn step_prediction_is_chi_step_shift() {
        let m = random_model(3, 8).unwrap();
        let pst = steady_state(&m.w).unwrap();
        let f = conjugate_matrix(&m.w, &m.s);
        let p1 = linear_prediction(&m.w, &pst, &f, 0.02, &Drive::Step, 1.5, 0.0).unwrap();
        let want = step_shift(&m.w, &pst, &m.s, &m.s, 0.02, 1.5).unwrap();
        assert!((m.s.as_vector().dot(&p1) - want).abs() < 1e-13);
    }

    #[test]
    fn sweep_rows() {
        let w = symmetric_model();
        let u = ProbVector::uniform(2);
        let rows = response_sweep(&w, &u, &pm1(), &pm1(), 0.01, ResponseKind::Pulse, &[0.0, 1.0], CmaxMode::Standard)
            .unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].ratio - 2.0 * (-2.0_f64).exp()).abs() < 1e-12);
        assert_eq!(rows[0].csv().split(',').count(), 5);
    }
}
