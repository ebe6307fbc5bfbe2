//! Correlation functions of score observables, exact and sampled.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::markov::{check_time, propagator, ProbVector, RateMatrix, ScoreVector};

/// ChaCha stream used by the Monte Carlo estimators, distinct from the one
/// [`crate::markov::random_model`] draws from.
pub const MC_STREAM: u64 = 1;

fn check_scores(w: &RateMatrix, p0: &ProbVector, scores: &[&ScoreVector]) -> Result<()> {
    w.check_dim(p0.len())?;
    scores.iter().try_for_each(|s| w.check_dim(s.len()))
}

fn weighted(s: &ScoreVector, v: &DVector<f64>) -> DVector<f64> {
    s.as_vector().component_mul(v)
}

/// `C(t) = <S(X(0)) T(X(t))> = 1 T exp(W t) S p0`.
pub fn two_point(
    w: &RateMatrix,
    p0: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    t: f64,
) -> Result<f64> {
    check_scores(w, p0, &[s, t_score])?;
    let v = propagator(w, t)? * weighted(s, p0.as_vector());
    Ok(t_score.as_vector().dot(&v))
}

/// `dC/dt = 1 T exp(W t) W S p0`.
pub fn correlation_derivative(
    w: &RateMatrix,
    p0: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    t: f64,
) -> Result<f64> {
    check_scores(w, p0, &[s, t_score])?;
    let v = propagator(w, t)? * (w.matrix() * weighted(s, p0.as_vector()));
    Ok(t_score.as_vector().dot(&v))
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.first() != Some(&0.0) {
        return Err(Error::TimesNotSorted);
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::TimesNotSorted);
    }
    Ok(())
}

/// `J`-point correlation `<S_1(t_1) S_2(t_2) ... S_J(t_J)>` with `t_1 = 0`,
/// evaluated as a right-to-left chain of matrix-vector products.
pub fn multipoint(
    w: &RateMatrix,
    p0: &ProbVector,
    scores: &[ScoreVector],
    times: &[f64],
) -> Result<f64> {
    if scores.is_empty() || scores.len() != times.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), got: scores.len() });
    }
    check_times(times)?;
    check_scores(w, p0, &scores.iter().collect::<Vec<_>>())?;
    let mut v = weighted(&scores[0], p0.as_vector());
    for (i, s) in scores.iter().enumerate().skip(1) {
        let dt = times[i] - times[i - 1];
        if dt > 0.0 {
            v = propagator(w, dt)? * v;
        }
        v = weighted(s, &v);
    }
    Ok(v.sum())
}

/// `sum_nu prod_i S_i(nu) p0(nu)`: the `J`-point correlation with all times
/// equal to zero.
pub fn equal_time_product(p0: &ProbVector, scores: &[ScoreVector]) -> Result<f64> {
    for s in scores {
        if s.len() != p0.len() {
            return Err(Error::DimensionMismatch { expected: p0.len(), got: s.len() });
        }
    }
    Ok((0..p0.len())
        .map(|nu| p0.as_slice()[nu] * scores.iter().map(|s| s.as_slice()[nu]).product::<f64>())
        .sum())
}

/// One sampled jump path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial_state: usize,
    /// `(time, new_state)` with strictly increasing times in `(0, horizon)`.
    pub jumps: Vec<(f64, usize)>,
    pub horizon: f64,
}

impl Trajectory {
    pub fn jump_count(&self) -> usize {
        self.jumps.len()
    }

    /// State occupied at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> usize {
        self.jumps
            .iter()
            .take_while(|(tj, _)| *tj <= t)
            .last()
            .map_or(self.initial_state, |&(_, s)| s)
    }

    pub fn final_state(&self) -> usize {
        self.jumps.last().map_or(self.initial_state, |&(_, s)| s)
    }
}

fn sample_index<R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = f64>, total: f64) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Gillespie sampling of one trajectory up to `horizon`.
///
/// Holding times in state `mu` are exponential with rate `R(mu)`; a state with
/// `R(mu) = 0` is absorbing and simply ends the path.
pub fn sample_trajectory<R: Rng + ?Sized>(
    w: &RateMatrix,
    p0: &ProbVector,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    w.check_dim(p0.len())?;
    check_time(horizon)?;
    let n = w.n();
    let mut state = sample_index(rng, p0.as_slice().iter().copied(), 1.0);
    let initial_state = state;
    let mut jumps = Vec::new();
    let mut now = 0.0;
    loop {
        let rate = w.escape_rates()[state];
        if rate <= 0.0 {
            break;
        }
        // 1 - u lies in (0, 1]; redraw the measure-zero u = 0 so jump times
        // stay strictly increasing.
        let hold = loop {
            let h = -(1.0 - rng.random::<f64>()).ln() / rate;
            if h > 0.0 {
                break h;
            }
        };
        now += hold;
        if now >= horizon {
            break;
        }
        let col = w.matrix().column(state);
        let from = state;
        state = sample_index(rng, (0..n).map(|nu| if nu == from { 0.0 } else { col[nu] }), rate);
        jumps.push((now, state));
    }
    Ok(Trajectory { initial_state, jumps, horizon })
}

/// Running mean and variance (Welford), mergeable across shards.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.count as f64 * other.count as f64) / n as f64;
        self.count = n;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Standard error of the mean from the unbiased sample variance.
    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        let var = self.m2 / (self.count - 1) as f64;
        (var / self.count as f64).sqrt()
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Accumulates `S(X(0)) T(X(t))` over `n_samples` trajectories drawn from
/// `rng`. Callers sharding across threads merge the returned accumulators.
pub fn mc_two_point_accumulate<R: Rng + ?Sized>(
    w: &RateMatrix,
    p0: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    t: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<MeanAccumulator> {
    check_scores(w, p0, &[s, t_score])?;
    let mut acc = MeanAccumulator::default();
    for _ in 0..n_samples {
        let path = sample_trajectory(w, p0, t, rng)?;
        acc.push(s.as_slice()[path.initial_state] * t_score.as_slice()[path.final_state()]);
    }
    Ok(acc)
}

/// Sampled estimate of [`two_point`].
pub fn mc_two_point(
    w: &RateMatrix,
    p0: &ProbVector,
    s: &ScoreVector,
    t_score: &ScoreVector,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples < 100 {
        return Err(Error::TooFewSamples(n_samples));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(MC_STREAM);
    let acc = mc_two_point_accumulate(w, p0, s, t_score, t, n_samples, &mut rng)?;
    Ok(McEstimate { estimate: acc.mean(), std_error: acc.std_error() })
}
