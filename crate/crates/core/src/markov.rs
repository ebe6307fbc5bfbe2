//! Finite-state continuous-time Markov jump processes.
//!
//! A generator `W` acts on column probability vectors: `w[(nu, mu)]` is the
//! rate of jumping from state `mu` to state `nu`, and every column sums to
//! zero. The time evolution is `P(t) = exp(W t) P(0)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Entries of a probability vector may dip this far below zero before they
/// are rejected.
pub const PROB_NEG_SLACK: f64 = 1e-14;
/// Allowed deviation of a probability vector's sum from one.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Largest total negative mass in a computed distribution that is treated as
/// roundoff and clamped away.
pub const CLAMP_DEFICIT: f64 = 1e-12;

/// Name of the pseudo-random generator used by [`random_model`] and the Monte
/// Carlo estimators. ChaCha is counter based, so streams are identical on
/// every platform.
pub const GENERATOR_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// Generator of a continuous-time Markov chain with columns summing to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    w: DMatrix<f64>,
    escape: Vec<f64>,
}

impl RateMatrix {
    /// Validates a raw row-major matrix. The diagonal is ignored and
    /// recomputed as the negative column escape rate.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NonSquare { rows: n, row, cols: r.len() });
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_matrix(&m)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::NonSquare { rows: n, row: 0, cols: m.ncols() });
        }
        if n < 2 {
            return Err(Error::BadDimension(format!("need at least 2 states, got {n}")));
        }
        let mut w = m.clone();
        let mut escape = vec![0.0; n];
        for mu in 0..n {
            let mut total = 0.0;
            for nu in 0..n {
                if nu == mu {
                    continue;
                }
                let rate = w[(nu, mu)];
                if !rate.is_finite() {
                    return Err(Error::NonFinite("rate matrix"));
                }
                if rate < 0.0 {
                    // reported 1-based, matching the W_{nu mu} convention
                    return Err(Error::NegativeRate { row: nu + 1, col: mu + 1, value: rate });
                }
                total += rate;
            }
            escape[mu] = total;
            w[(mu, mu)] = -total;
        }
        Ok(Self { w, escape })
    }

    /// The null generator: nothing ever jumps.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_matrix(&DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Escape rates `R(mu) = sum_{nu != mu} W[nu][mu]`.
    pub fn escape_rates(&self) -> &[f64] {
        &self.escape
    }

    pub fn max_escape_rate(&self) -> f64 {
        self.escape.iter().copied().fold(0.0, f64::max)
    }

    /// `k W`, the generator of the same process run `k` times faster.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::from_matrix(&(&self.w * k))
    }

    /// `W p` for a plain vector.
    pub fn apply(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.w * p
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: len });
        }
        Ok(())
    }
}

/// A probability distribution over the states of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(DVector<f64>);

impl ProbVector {
    /// Validates user input. Entries within [`PROB_NEG_SLACK`] of zero are
    /// clamped.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("probability vector"));
        }
        if let Some(x) = p.iter().find(|&&x| x < -PROB_NEG_SLACK) {
            return Err(Error::InvalidProbability(format!("negative entry {x}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidProbability(format!("entries sum to {sum}")));
        }
        Ok(Self(DVector::from_iterator(p.len(), p.into_iter().map(|x| x.max(0.0)))))
    }

    /// Wraps the output of a propagation. Negative roundoff is clamped and
    /// the vector renormalized when the clamped mass is below
    /// [`CLAMP_DEFICIT`]; anything larger is a genuine error.
    pub fn from_computed(mut p: DVector<f64>) -> Result<Self> {
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("computed distribution"));
        }
        let deficit: f64 = p.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
        if deficit >= CLAMP_DEFICIT {
            return Err(Error::InvalidProbability(format!("negative mass {deficit:e}")));
        }
        p.iter_mut().for_each(|x| *x = x.max(0.0));
        let sum = p.sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProbability(format!("entries sum to {sum}")));
        }
        p /= sum;
        Ok(Self(p))
    }

    /// Uniform distribution over `n` states.
    pub fn uniform(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0 / n as f64))
    }

    /// All mass on `state`.
    pub fn point(n: usize, state: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[state] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// Real-valued score function over states.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    s: DVector<f64>,
    max_abs: f64,
}

impl ScoreVector {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("score vector"));
        }
        let max_abs = s.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        Ok(Self { s: DVector::from_vec(s), max_abs })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// `max_nu |s(nu)|`.
    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    pub fn max(&self) -> f64 {
        self.s.max()
    }

    pub fn min(&self) -> f64 {
        self.s.min()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn as_slice(&self) -> &[f64] {
        self.s.as_slice()
    }

    pub fn diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.s)
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::NonFinite("time"));
    }
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

/// `exp(W t)`, the column-stochastic transition matrix over time `t`.
pub fn propagator(w: &RateMatrix, t: f64) -> Result<DMatrix<f64>> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(DMatrix::identity(w.n(), w.n()));
    }
    Ok((w.matrix() * t).exp())
}

/// Solves the master equation from `p0` for a time `t`.
pub fn propagate(w: &RateMatrix, p0: &ProbVector, t: f64) -> Result<ProbVector> {
    w.check_dim(p0.len())?;
    let m = propagator(w, t)?;
    ProbVector::from_computed(m * p0.as_vector())
}

/// `int_0^t exp(W s) ds`, read off the upper-right block of the exponential
/// of `[[W, I], [0, 0]] t`.
pub fn propagator_integral(w: &RateMatrix, t: f64) -> Result<DMatrix<f64>> {
    check_time(t)?;
    let n = w.n();
    if t == 0.0 {
        return Ok(DMatrix::zeros(n, n));
    }
    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(w.matrix() * t));
    block.view_mut((0, n), (n, n)).fill_with_identity();
    block.view_mut((0, n), (n, n)).scale_mut(t);
    let e = block.exp();
    Ok(e.view((0, n), (n, n)).into_owned())
}

/// The unique stationary distribution `W P_st = 0`.
pub fn steady_state(w: &RateMatrix) -> Result<ProbVector> {
    let n = w.n();
    let scale = w.matrix().amax().max(1.0);
    let svd = w.matrix().clone().svd(false, false);
    let kernel = svd.singular_values.iter().filter(|&&s| s <= 1e-10 * scale).count();
    if kernel > 1 {
        return Err(Error::NonUniqueSteadyState(kernel));
    }
    // Replace the last balance equation by normalization.
    let mut a = w.matrix().clone();
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let p = a.lu().solve(&b).ok_or(Error::NoConvergence(f64::INFINITY))?;
    let residual = (w.matrix() * &p).amax();
    if residual > 1e-10 * scale {
        return Err(Error::NoConvergence(residual));
    }
    ProbVector::from_computed(p)
}

/// Steady-state dynamical activity rate `sum_mu R(mu) P_st(mu)`.
pub fn steady_activity_rate(w: &RateMatrix, p_st: &ProbVector) -> f64 {
    w.escape_rates().iter().zip(p_st.as_slice()).map(|(r, p)| r * p).sum()
}

/// `|W p|_inf`, used to decide whether `p` is stationary.
pub fn stationarity_residual(w: &RateMatrix, p: &ProbVector) -> f64 {
    w.apply(p.as_vector()).amax()
}

/// A randomly drawn model: generator, initial distribution and score.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomModel {
    pub w: RateMatrix,
    pub p0: ProbVector,
    pub s: ScoreVector,
}

/// Draws a model from `seed`.
///
/// Off-diagonal rates are i.i.d. uniform on (0, 1], the initial distribution
/// is uniform on the simplex (normalized unit exponentials) and scores are
/// i.i.d. uniform on [-1, 1]. Draw order: rates row-major, then `p0`, then
/// scores.
pub fn random_model(n: usize, seed: u64) -> Result<RandomModel> {
    if n < 2 {
        return Err(Error::BadDimension(format!("need at least 2 states, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::zeros(n, n);
    for nu in 0..n {
        for mu in 0..n {
            if nu != mu {
                m[(nu, mu)] = 1.0 - rng.random::<f64>();
            }
        }
    }
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    let p0 = e.iter().map(|x| x / total).collect();
    let s = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Ok(RandomModel {
        w: RateMatrix::from_matrix(&m)?,
        p0: ProbVector::new(p0)?,
        s: ScoreVector::new(s)?,
    })
}

/// Two-state chain with a single jump `B2 -> B1` at unit rate.
pub fn decay_model() -> RateMatrix {
    RateMatrix::new(&[vec![0.0, 1.0], vec![0.0, 0.0]]).expect("valid generator")
}

/// Symmetric two-state chain with unit rates in both directions.
pub fn symmetric_model() -> RateMatrix {
    RateMatrix::new(&[vec![0.0, 1.0], vec![1.0, 0.0]]).expect("valid generator")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
        // Plain series with repeated halving, independent of nalgebra's Padé.
        let mut k = 0;
        let mut scaled = a.clone();
        while scaled.amax() > 0.25 {
            scaled /= 2.0;
            k += 1;
        }
        let n = a.nrows();
        let mut sum = DMatrix::identity(n, n);
        let mut term = DMatrix::identity(n, n);
        for j in 1..30 {
            term = &term * &scaled / j as f64;
            sum += &term;
        }
        for _ in 0..k {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn validate_recomputes_diagonal() {
        let w = RateMatrix::new(&[vec![5.0, 1.0], vec![0.0, 7.0]]).unwrap();
        assert_eq!(w.escape_rates(), &[0.0, 1.0]);
        assert_eq!(w.matrix()[(0, 0)], 0.0);
        assert_eq!(w.matrix()[(1, 1)], -1.0);
    }

    #[test]
    fn zero_matrix_is_frozen() {
        let w = RateMatrix::zeros(3).unwrap();
        assert_eq!(w.escape_rates(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn negative_rate_reports_index() {
        let err = RateMatrix::new(&[vec![0.0, -0.5], vec![0.0, 0.5]]).unwrap_err();
        assert_eq!(err, Error::NegativeRate { row: 1, col: 2, value: -0.5 });
    }

    #[test]
    fn non_square_and_non_finite_rejected() {
        assert!(matches!(
            RateMatrix::new(&[vec![0.0, 1.0], vec![0.0]]),
            Err(Error::NonSquare { .. })
        ));
        assert!(matches!(
            RateMatrix::new(&[vec![0.0, f64::NAN], vec![0.0, 0.0]]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(RateMatrix::new(&[vec![0.0]]), Err(Error::BadDimension(_))));
    }

    #[test]
    fn propagator_closed_forms() {
        let w = decay_model();
        assert_eq!(propagator(&w, 0.0).unwrap(), DMatrix::identity(2, 2));
        for &t in &[0.1, 1.0, 3.7, 10.0] {
            let m = propagator(&w, t).unwrap();
            let e = (-t).exp();
            let want = DMatrix::from_row_slice(2, 2, &[1.0, 1.0 - e, 0.0, e]);
            assert!((&m - &want).amax() < 1e-13, "t={t}");
            assert!((&m - taylor_exp(&(w.matrix() * t))).amax() < 1e-12);
        }
        let w = symmetric_model();
        for &t in &[0.2, 1.0, 5.0] {
            let m = propagator(&w, t).unwrap();
            let e = (-2.0 * t).exp();
            let (a, b) = ((1.0 + e) / 2.0, (1.0 - e) / 2.0);
            let want = DMatrix::from_row_slice(2, 2, &[a, b, b, a]);
            assert!((&m - &want).amax() < 1e-13);
        }
        assert_eq!(propagator(&w, -1.0), Err(Error::NegativeTime(-1.0)));
    }

    #[test]
    fn propagate_examples() {
        let w = decay_model();
        let p0 = ProbVector::new(vec![0.0, 1.0]).unwrap();
        let p = propagate(&w, &p0, 2.0).unwrap();
        let e = (-2.0_f64).exp();
        assert!((p.as_slice()[0] - (1.0 - e)).abs() < 1e-14);
        assert!((p.as_slice()[1] - e).abs() < 1e-14);
        assert_eq!(propagate(&w, &p0, 0.0).unwrap(), p0);
        let frozen = RateMatrix::zeros(2).unwrap();
        assert_eq!(propagate(&frozen, &p0, 9.0).unwrap(), p0);
        let bad = ProbVector::uniform(3);
        assert!(matches!(propagate(&w, &bad, 1.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn propagator_integral_examples() {
        let w = decay_model();
        assert_eq!(propagator_integral(&w, 0.0).unwrap(), DMatrix::zeros(2, 2));
        let frozen = RateMatrix::zeros(3).unwrap();
        let got = propagator_integral(&frozen, 2.5).unwrap();
        assert!((got - DMatrix::identity(3, 3) * 2.5).amax() < 1e-14);
        for &t in &[0.5, 1.0, 4.0] {
            let got = propagator_integral(&w, t).unwrap();
            assert!((got[(1, 1)] - (1.0 - (-t).exp())).abs() < 1e-13);
            // Composite Simpson on the closed-form propagator entry.
            let k = 2000;
            let h = t / k as f64;
            let f = |s: f64| (-s).exp();
            let mut simpson = f(0.0) + f(t);
            for i in 1..k {
                simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
            }
            simpson *= h / 3.0;
            assert!((got[(1, 1)] - simpson).abs() < 1e-12);
        }
    }

    #[test]
    fn steady_state_examples() {
        let p = steady_state(&symmetric_model()).unwrap();
        assert!((p.as_slice()[0] - 0.5).abs() < 1e-14);
        let p = steady_state(&decay_model()).unwrap();
        assert!((p.as_slice()[0] - 1.0).abs() < 1e-14);
        assert!(p.as_slice()[1].abs() < 1e-14);
        let cycle = RateMatrix::new(&[
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        let p = steady_state(&cycle).unwrap();
        for x in p.as_slice() {
            assert!((x - 1.0 / 3.0).abs() < 1e-14);
        }
        assert!(matches!(
            steady_state(&RateMatrix::zeros(2).unwrap()),
            Err(Error::NonUniqueSteadyState(2))
        ));
    }

    #[test]
    fn random_model_is_deterministic_and_valid() {
        let a = random_model(3, 42).unwrap();
        let b = random_model(3, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_model(3, 43).unwrap());
        for seed in 0..1000 {
            let m = random_model(2, seed).unwrap();
            let sum: f64 = m.p0.as_slice().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(m.s.as_slice().iter().all(|s| (-1.0..=1.0).contains(s)));
        }
        for seed in 0..50 {
            let m = random_model(3, seed).unwrap();
            for j in 0..3 {
                assert!(m.w.matrix().column(j).sum().abs() < 1e-12);
            }
        }
        assert!(matches!(random_model(1, 0), Err(Error::BadDimension(_))));
    }

    #[test]
    fn probability_clamping() {
        let p = ProbVector::from_computed(DVector::from_vec(vec![1.0 + 1e-15, -1e-15])).unwrap();
        assert_eq!(p.as_slice()[1], 0.0);
        assert!(ProbVector::from_computed(DVector::from_vec(vec![1.1, -0.1])).is_err());
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![1.0, -1e-3]).is_err());
    }
}
