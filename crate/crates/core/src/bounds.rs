//! Dynamical activity, the geodesic argument, and the correlation bounds.
//!
//! Every bound is returned as a [`BoundReport`] holding both sides of the
//! inequality. Sine-type bounds only apply while the geodesic argument
//! `1/2 int_{t1}^{t2} sqrt(A(t))/t dt` stays at or below `pi/2`; past that point
//! the report carries the trivial bound `2 C_max` and clears
//! `in_validity_domain`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::correlation::{correlation_derivative, equal_time_product, multipoint, two_point};
use crate::error::{Error, Result};
use crate::markov::{
    check_time, propagate, propagator_integral, stationarity_residual, ProbVector, RateMatrix,
    ScoreVector,
};
use crate::path_space::eta;
use crate::quadrature;

/// A report passes when `ratio <= 1 + RATIO_SLACK`.
pub const RATIO_SLACK: f64 = 1e-9;
/// Absolute tolerance of the geodesic integral.
pub const GEODESIC_TOL: f64 = 1e-9;
/// `|W p0|_inf` below which `p0` is treated as stationary and the geodesic
/// argument takes its closed form.
pub const STEADY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundId {
    MainEq5,
    ZeroTEq6,
    DerivEq7,
    EtaEq8,
    TangentS29,
    MultiSinS40,
    MultiEtaS39,
    OnepointSinS42,
    OnepointEtaS41,
    OnepointActivityS45,
    PulseEq11,
    StepEq12,
}

impl BoundId {
    pub const ALL: [BoundId; 12] = [
        BoundId::MainEq5,
        BoundId::ZeroTEq6,
        BoundId::DerivEq7,
        BoundId::EtaEq8,
        BoundId::TangentS29,
        BoundId::MultiSinS40,
        BoundId::MultiEtaS39,
        BoundId::OnepointSinS42,
        BoundId::OnepointEtaS41,
        BoundId::OnepointActivityS45,
        BoundId::PulseEq11,
        BoundId::StepEq12,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::MainEq5 => "MAIN_EQ5",
            BoundId::ZeroTEq6 => "ZERO_T_EQ6",
            BoundId::DerivEq7 => "DERIV_EQ7",
            BoundId::EtaEq8 => "ETA_EQ8",
            BoundId::TangentS29 => "TANGENT_S29",
            BoundId::MultiSinS40 => "MULTI_SIN_S40",
            BoundId::MultiEtaS39 => "MULTI_ETA_S39",
            BoundId::OnepointSinS42 => "ONEPOINT_SIN_S42",
            BoundId::OnepointEtaS41 => "ONEPOINT_ETA_S41",
            BoundId::OnepointActivityS45 => "ONEPOINT_ACTIVITY_S45",
            BoundId::PulseEq11 => "PULSE_EQ11",
            BoundId::StepEq12 => "STEP_EQ12",
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        BoundId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown bound id `{s}`"))
    }
}

/// Which prefactor replaces `S_max T_max`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum CmaxMode {
    /// `S_max T_max`.
    #[default]
    Standard,
    /// Half the range of `S(nu) T(mu)` over all state pairs.
    Tight,
}

impl CmaxMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CmaxMode::Standard => "standard",
            CmaxMode::Tight => "tight",
        }
    }
}

impl fmt::Display for CmaxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CmaxMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(CmaxMode::Standard),
            "tight" => Ok(CmaxMode::Tight),
            _ => Err(format!("unknown cmax mode `{s}` (expected standard|tight)")),
        }
    }
}

pub const BOUND_CSV_HEADER: &str = "bound_id,t1,t2,lhs,rhs,ratio,in_domain,cmax_mode";

/// One evaluated inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bound_id: BoundId,
    pub t1: f64,
    pub t2: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; zero when both sides vanish or `rhs` is infinite.
    pub ratio: f64,
    pub in_validity_domain: bool,
    pub geodesic_arg: Option<f64>,
    pub cmax_mode: CmaxMode,
    /// A second right-hand side recorded for comparison: the sine bound for
    /// the tangent report, the activity bound for the one-point sine report
    /// and vice versa.
    pub companion_rhs: Option<f64>,
}

pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs.is_infinite() || (lhs == 0.0 && rhs == 0.0) {
        0.0
    } else {
        lhs / rhs
    }
}

impl BoundReport {
    fn new(bound_id: BoundId, t1: f64, t2: f64, lhs: f64, rhs: f64, cmax_mode: CmaxMode) -> Self {
        Self {
            bound_id,
            t1,
            t2,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            in_validity_domain: true,
            geodesic_arg: None,
            cmax_mode,
            companion_rhs: None,
        }
    }

    /// Sine bound `2 cmax sin(arg)`, replaced by `2 cmax` past `pi/2`.
    fn sine(
        bound_id: BoundId,
        t1: f64,
        t2: f64,
        lhs: f64,
        cmax: f64,
        arg: f64,
        cmax_mode: CmaxMode,
    ) -> Self {
        let in_domain = arg <= FRAC_PI_2;
        let rhs = 2.0 * cmax * if in_domain { arg.sin() } else { 1.0 };
        let mut r = Self::new(bound_id, t1, t2, lhs, rhs, cmax_mode);
        r.in_validity_domain = in_domain;
        r.geodesic_arg = Some(arg);
        r
    }

    pub fn passes(&self) -> bool {
        self.ratio <= 1.0 + RATIO_SLACK
    }

    /// `bound_id,t1,t2,lhs,rhs,ratio,in_domain,cmax_mode`.
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.bound_id,
            crate::fmt_real(self.t1),
            crate::fmt_real(self.t2),
            crate::fmt_real(self.lhs),
            crate::fmt_real(self.rhs),
            crate::fmt_real(self.ratio),
            self.in_validity_domain,
            self.cmax_mode
        )
    }

    /// Returns a copy with the right-hand side multiplied by `factor`.
    pub fn with_scaled_rhs(&self, factor: f64) -> Self {
        let mut r = self.clone();
        r.rhs *= factor;
        r.ratio = ratio(r.lhs, r.rhs);
        r
    }
}

/// `sum_mu R(mu) p(mu)`, the instantaneous jump rate under `p`.
pub fn activity_rate(w: &RateMatrix, p: &ProbVector) -> Result<f64> {
    w.check_dim(p.len())?;
    Ok(w.escape_rates().iter().zip(p.as_slice()).map(|(r, p)| r * p).sum())
}

/// Expected number of jumps in `[0, t]`.
pub fn dynamical_activity(w: &RateMatrix, p0: &ProbVector, t: f64) -> Result<f64> {
    w.check_dim(p0.len())?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let occupation = propagator_integral(w, t)? * p0.as_vector();
    let a: f64 = w.escape_rates().iter().zip(occupation.iter()).map(|(r, x)| r * x).sum();
    Ok(a.max(0.0))
}

/// Geodesic argument `1/2 int_{t1}^{t2} sqrt(A(t))/t dt`.
///
/// With `t = s^2` the integrand becomes `sqrt(A(s^2))/s`, which is bounded at
/// `s = 0`, and is integrated by adaptive Gauss–Legendre to
/// [`GEODESIC_TOL`]. Stationary starts use the closed form
/// `sqrt(a) (sqrt(t2) - sqrt(t1))`. Equal endpoints give zero.
pub fn geodesic_arg(w: &RateMatrix, p0: &ProbVector, t1: f64, t2: f64) -> Result<f64> {
    w.check_dim(p0.len())?;
    if !(t1.is_finite() && t2.is_finite()) || t1 < 0.0 || t2 < t1 {
        return Err(Error::BadInterval { t1, t2 });
    }
    if t1 == t2 {
        return Ok(0.0);
    }
    if stationarity_residual(w, p0) <= STEADY_TOL {
        let a = activity_rate(w, p0)?;
        return Ok(a.sqrt() * (t2.sqrt() - t1.sqrt()));
    }
    if w.max_escape_rate() == 0.0 {
        return Ok(0.0);
    }
    quadrature::integrate(
        |s| {
            let a = dynamical_activity(w, p0, s * s)?;
            Ok(a.sqrt() / s)
        },
        t1.sqrt(),
        t2.sqrt(),
        GEODESIC_TOL,
    )
}

/// The prefactor replacing `S_max T_max`.
pub fn cmax(s: &ScoreVector, t: &ScoreVector, mode: CmaxMode) -> f64 {
    match mode {
        CmaxMode::Standard => s.max_abs() * t.max_abs(),
        CmaxMode::Tight => {
            let (lo, hi) = product_range((s.min(), s.max()), (t.min(), t.max()));
            0.5 * (hi - lo)
        }
    }
}

fn product_range(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let c = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
    (c.iter().copied().fold(f64::INFINITY, f64::min), c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Prefactor for a product of several scores.
pub fn cmax_product(scores: &[ScoreVector], mode: CmaxMode) -> f64 {
    match mode {
        CmaxMode::Standard => scores.iter().map(ScoreVector::max_abs).product(),
        CmaxMode::Tight => {
            let (lo, hi) = scores
                .iter()
                .fold((1.0, 1.0), |acc, s| product_range(acc, (s.min(), s.max())));
            0.5 * (hi - lo)
        }
    }
}

fn cmax_single(s: &ScoreVector, mode: CmaxMode) -> f64 {
    match mode {
        CmaxMode::Standard => s.max_abs(),
        CmaxMode::Tight => 0.5 * (s.max() - s.min()),
    }
}

fn check_interval(t1: f64, t2: f64) -> Result<()> {
    if !(t1.is_finite() && t2.is_finite()) || t1 < 0.0 || t2 < t1 {
        return Err(Error::BadInterval { t1, t2 });
    }
    Ok(())
}

/// Sine bound on `|C(t1) - C(t2)|` from precomputed pieces. Tagged as the
/// zero-to-`t` form when `t1 = 0`.
pub fn main_report(
    c1: f64,
    c2: f64,
    t1: f64,
    t2: f64,
    cmax: f64,
    arg: f64,
    mode: CmaxMode,
) -> BoundReport {
    let id = if t1 == 0.0 { BoundId::ZeroTEq6 } else { BoundId::MainEq5 };
    BoundReport::sine(id, t1, t2, (c1 - c2).abs(), cmax, arg, mode)
}

/// `|C(t1) - C(t2)| <= 2 C_max sin(geodesic_arg(t1, t2))`.
#[allow(clippy::too_many_arguments)]
pub fn bound_main(
    w: &RateMatrix,
    p0: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    t1: f64,
    t2: f64,
    mode: CmaxMode,
) -> Result<BoundReport> {
    check_interval(t1, t2)?;
    let c1 = two_point(w, p0, s, t_score, t1)?;
    let c2 = two_point(w, p0, s, t_score, t2)?;
    let arg = geodesic_arg(w, p0, t1, t2)?;
    Ok(main_report(c1, c2, t1, t2, cmax(s, t_score, mode), arg, mode))
}

pub fn derivative_report(dc: f64, activity: f64, t: f64, cmax: f64, mode: CmaxMode) -> BoundReport {
    BoundReport::new(BoundId::DerivEq7, t, t, dc.abs(), cmax * activity.sqrt() / t, mode)
}

/// `|dC/dt| <= C_max sqrt(A(t)) / t` for `t > 0`.
pub fn bound_derivative(
    w: &RateMatrix,
    p0: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    t: f64,
    mode: CmaxMode,
) -> Result<BoundReport> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::NonPositiveTime(t));
    }
    let dc = correlation_derivative(w, p0, s, t_score, t)?;
    let a = dynamical_activity(w, p0, t)?;
    Ok(derivative_report(dc, a, t, cmax(s, t_score, mode), mode))
}

pub fn eta_report(c0: f64, ct: f64, eta_t: f64, t: f64, cmax: f64, mode: CmaxMode) -> BoundReport {
    let rhs = 2.0 * cmax * (1.0 - eta_t).max(0.0).sqrt();
    BoundReport::new(BoundId::EtaEq8, 0.0, t, (c0 - ct).abs(), rhs, mode)
}

/// `|C(0) - C(t)| <= 2 C_max sqrt(1 - eta(t))`, valid for every `t`.
pub fn bound_eta(
    w: &RateMatrix,
    p0: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    t: f64,
    mode: CmaxMode,
) -> Result<BoundReport> {
    check_time(t)?;
    let c0 = two_point(w, p0, s, t_score, 0.0)?;
    let ct = two_point(w, p0, s, t_score, t)?;
    Ok(eta_report(c0, ct, eta(w, p0, t)?, t, cmax(s, t_score, mode), mode))
}

pub fn tangent_report(c0: f64, ct: f64, t: f64, cmax: f64, arg: f64, mode: CmaxMode) -> BoundReport {
    let lhs = (c0 - ct).abs();
    let sine = BoundReport::sine(BoundId::TangentS29, 0.0, t, lhs, cmax, arg, mode);
    let in_domain = arg < FRAC_PI_2;
    let rhs = if in_domain { 2.0 * cmax * arg.tan() } else { f64::INFINITY };
    let mut r = BoundReport::new(BoundId::TangentS29, 0.0, t, lhs, rhs, mode);
    r.in_validity_domain = in_domain;
    r.geodesic_arg = Some(arg);
    r.companion_rhs = Some(sine.rhs);
    r
}

/// `|C(0) - C(t)| <= 2 C_max tan(geodesic_arg(0, t))`, the looser bound that
/// follows from the path-space uncertainty relation. At `pi/2` and beyond the
/// tangent diverges: the report carries an infinite `rhs` and is flagged out
/// of domain. `companion_rhs` holds the corresponding sine bound.
pub fn bound_tangent_tur(
    w: &RateMatrix,
    p0: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    t: f64,
    mode: CmaxMode,
) -> Result<BoundReport> {
    check_time(t)?;
    let c0 = two_point(w, p0, s, t_score, 0.0)?;
    let ct = two_point(w, p0, s, t_score, t)?;
    let arg = geodesic_arg(w, p0, 0.0, t)?;
    Ok(tangent_report(c0, ct, t, cmax(s, t_score, mode), arg, mode))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultipointVariant {
    Sin,
    Eta,
}

/// Bound on `|<S_1(0)...S_J(0)> - <S_1(t_1)...S_J(t_J)>|` with prefactor
/// `prod_i S_{i,max}` (or the half range of the product in tight mode).
pub fn bound_multipoint(
    w: &RateMatrix,
    p0: &ProbVector,
    scores: &[ScoreVector],
    times: &[f64],
    variant: MultipointVariant,
    mode: CmaxMode,
) -> Result<BoundReport> {
    let c = multipoint(w, p0, scores, times)?;
    let c0 = equal_time_product(p0, scores)?;
    let t_last = *times.last().expect("multipoint validated a non-empty list");
    let k = cmax_product(scores, mode);
    let lhs = (c0 - c).abs();
    Ok(match variant {
        MultipointVariant::Sin => {
            let arg = geodesic_arg(w, p0, 0.0, t_last)?;
            BoundReport::sine(BoundId::MultiSinS40, 0.0, t_last, lhs, k, arg, mode)
        }
        MultipointVariant::Eta => {
            let rhs = 2.0 * k * (1.0 - eta(w, p0, t_last)?).max(0.0).sqrt();
            BoundReport::new(BoundId::MultiEtaS39, 0.0, t_last, lhs, rhs, mode)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnepointVariant {
    Sin,
    Eta,
    Activity,
}

/// Bound on `|<S(0)> - <S(t)>|`.
///
/// The sine and activity reports each carry the other's right-hand side in
/// `companion_rhs`, so the short-time/long-time crossover between the two can
/// be read off a single report.
pub fn bound_onepoint(
    w: &RateMatrix,
    p0: &ProbVector,
    s: &ScoreVector,
    t: f64,
    variant: OnepointVariant,
    mode: CmaxMode,
) -> Result<BoundReport> {
    check_time(t)?;
    w.check_dim(s.len())?;
    let pt = propagate(w, p0, t)?;
    let lhs = (s.as_vector().dot(p0.as_vector()) - s.as_vector().dot(pt.as_vector())).abs();
    let k = cmax_single(s, mode);
    let activity_rhs = || -> Result<f64> { Ok(2.0 * k * dynamical_activity(w, p0, t)?) };
    Ok(match variant {
        OnepointVariant::Eta => {
            let rhs = 2.0 * k * (1.0 - eta(w, p0, t)?).max(0.0).sqrt();
            BoundReport::new(BoundId::OnepointEtaS41, 0.0, t, lhs, rhs, mode)
        }
        OnepointVariant::Sin => {
            let arg = geodesic_arg(w, p0, 0.0, t)?;
            let mut r = BoundReport::sine(BoundId::OnepointSinS42, 0.0, t, lhs, k, arg, mode);
            r.companion_rhs = Some(activity_rhs()?);
            r
        }
        OnepointVariant::Activity => {
            let arg = geodesic_arg(w, p0, 0.0, t)?;
            let sine = BoundReport::sine(BoundId::OnepointSinS42, 0.0, t, lhs, k, arg, mode);
            let mut r =
                BoundReport::new(BoundId::OnepointActivityS45, 0.0, t, lhs, activity_rhs()?, mode);
            r.companion_rhs = Some(sine.rhs);
            r
        }
    })
}
