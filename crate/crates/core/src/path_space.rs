//! Discrete-time skeletons of scaled path measures.
//!
//! For a fixed horizon `tau`, the scaled process with generator `(t/tau) W`
//! reproduces at time `tau` what the original process does by time `t`. Its
//! path measure is continuous, but sampling it on `L + 1` equally spaced
//! instants gives a distribution over `N^(L+1)` state sequences that can be
//! enumerated exactly. The skeleton is a deterministic function of the
//! continuous path, so by data processing its TVD can only be smaller and its
//! Bhattacharyya coefficient only larger than those of the full path
//! measures. Every continuous-time bound on path TVD or on the Bhattacharyya
//! angle therefore also holds for skeletons, which makes them an exact oracle.

use crate::bounds::geodesic_arg;
use crate::distances::{bhattacharyya, bhattacharyya_angle, tvd, FiniteDistribution};
use crate::error::{Error, Result};
use crate::markov::{check_time, propagator, ProbVector, RateMatrix};

/// Largest number of paths a skeleton may enumerate.
pub const MAX_PATHS: u128 = 1_000_000;

/// Shape of a skeleton: `n_states^(n_steps + 1)` paths on `[0, tau]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSkeleton {
    pub n_states: usize,
    pub n_steps: usize,
    pub tau: f64,
}

impl PathSkeleton {
    pub fn new(n_states: usize, n_steps: usize, tau: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::BadDimension("skeleton needs at least one step".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::NonPositiveTime(tau));
        }
        let count = (n_states as u128).checked_pow(n_steps as u32 + 1).unwrap_or(u128::MAX);
        if count > MAX_PATHS {
            return Err(Error::TooManyPaths(count));
        }
        Ok(Self { n_states, n_steps, tau })
    }

    pub fn path_count(&self) -> usize {
        self.n_states.pow(self.n_steps as u32 + 1)
    }

    /// Canonical key of a path: base-`N` digits with `x_0` most significant.
    pub fn encode(&self, path: &[usize]) -> u64 {
        path.iter().fold(0u64, |k, &x| k * self.n_states as u64 + x as u64)
    }

    pub fn decode(&self, mut key: u64) -> Vec<usize> {
        let n = self.n_states as u64;
        let mut path = vec![0; self.n_steps + 1];
        for slot in path.iter_mut().rev() {
            *slot = (key % n) as usize;
            key /= n;
        }
        path
    }

    pub fn first_state(&self, key: u64) -> usize {
        (key / (self.n_states as u64).pow(self.n_steps as u32)) as usize
    }

    pub fn last_state(&self, key: u64) -> usize {
        (key % self.n_states as u64) as usize
    }
}

/// Exact skeleton distribution of the scaled process `Q(.; t)` on horizon
/// `tau` with `n_steps` steps. Path `(x_0, ..., x_L)` has probability
/// `p0(x_0) prod_k M[x_{k+1}][x_k]` with `M = exp((t/tau) W tau/L)`.
pub fn skeleton_distribution(
    w: &RateMatrix,
    p0: &ProbVector,
    tau: f64,
    n_steps: usize,
    t: f64,
) -> Result<(PathSkeleton, FiniteDistribution)> {
    w.check_dim(p0.len())?;
    check_time(t)?;
    let skel = PathSkeleton::new(w.n(), n_steps, tau)?;
    let n = w.n();
    // (t/tau) W over a step tau/L is W over t/L.
    let step = propagator(w, t / n_steps as f64)?;
    let mut probs = p0.as_slice().to_vec();
    for _ in 0..n_steps {
        let mut next = Vec::with_capacity(probs.len() * n);
        for (prefix, &p) in probs.iter().enumerate() {
            let last = prefix % n;
            for x in 0..n {
                next.push(p * step[(x, last)].max(0.0));
            }
        }
        probs = next;
    }
    // Rescale away the propagator's last-ulp normalization error.
    let total: f64 = crate::distances::kahan_sum(probs.iter().copied());
    probs.iter_mut().for_each(|p| *p /= total);
    Ok((skel, FiniteDistribution::from_dense(probs)?))
}

/// `sum_mu p0(mu) exp(-t R(mu) / 2)`: the exact Bhattacharyya coefficient
/// between the scaled path measures at `0` and `t`. Only no-jump paths carry
/// mass under the null generator.
pub fn bhat_survival(w: &RateMatrix, p0: &ProbVector, t: f64) -> Result<f64> {
    w.check_dim(p0.len())?;
    check_time(t)?;
    Ok(p0
        .as_slice()
        .iter()
        .zip(w.escape_rates())
        .map(|(p, r)| p * (-0.5 * t * r).exp())
        .sum::<f64>()
        .min(1.0))
}

/// `eta(t) = bhat_survival(t)^2`.
pub fn eta(w: &RateMatrix, p0: &ProbVector, t: f64) -> Result<f64> {
    Ok(bhat_survival(w, p0, t)?.powi(2))
}

/// Outcome of comparing two skeleton distributions against the geodesic
/// bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PathInequalityReport {
    pub tvd_path: f64,
    pub bhat_path: f64,
    pub geodesic_arg: f64,
    /// `sin(geodesic_arg)`, or `None` beyond `pi/2` where the sine bound is
    /// not claimed.
    pub sin_rhs: Option<f64>,
    /// `arccos(bhat_path)`.
    pub arccos_lhs: f64,
    pub angle_holds: bool,
    pub tvd_holds: bool,
}

impl PathInequalityReport {
    pub fn passed(&self) -> bool {
        self.angle_holds && self.tvd_holds
    }
}

const PATH_SLACK: f64 = 1e-9;

/// Checks `arccos(Bhat) <= geodesic_arg` and, inside its validity range,
/// `TVD <= sin(geodesic_arg)` between the skeletons at `t1` and `t2`.
pub fn verify_path_inequalities(
    w: &RateMatrix,
    p0: &ProbVector,
    tau: f64,
    n_steps: usize,
    t1: f64,
    t2: f64,
) -> Result<PathInequalityReport> {
    if !(0.0 <= t1 && t1 <= t2 && t2 <= tau) {
        return Err(Error::BadInterval { t1, t2 });
    }
    let (_, q1) = skeleton_distribution(w, p0, tau, n_steps, t1)?;
    let (_, q2) = skeleton_distribution(w, p0, tau, n_steps, t2)?;
    let tvd_path = tvd(&q1, &q2)?;
    let bhat_path = bhattacharyya(&q1, &q2)?;
    let arccos_lhs = bhattacharyya_angle(&q1, &q2)?;
    let arg = geodesic_arg(w, p0, t1, t2)?;
    let angle_holds = arccos_lhs <= arg + PATH_SLACK;
    let sin_rhs = (arg <= std::f64::consts::FRAC_PI_2).then(|| arg.sin());
    let tvd_holds = sin_rhs.is_none_or(|s| tvd_path <= s + PATH_SLACK);
    Ok(PathInequalityReport {
        tvd_path,
        bhat_path,
        geodesic_arg: arg,
        sin_rhs,
        arccos_lhs,
        angle_holds,
        tvd_holds,
    })
}
