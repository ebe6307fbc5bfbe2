//! Grid evaluation of the bound catalog, figure tables, and the randomized
//! stress sweep.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bounds::{
    cmax, cmax_product, dynamical_activity, eta_report, main_report, derivative_report,
    geodesic_arg, ratio, tangent_report, BoundId, BoundReport, CmaxMode,
};
use crate::correlation::{correlation_derivative, equal_time_product, multipoint, two_point};
use crate::error::{Error, Result};
use crate::linear_response::{bound_pulse, bound_step, response_sweep, ResponseKind, RESPONSE_CSV_HEADER};
use crate::markov::{
    decay_model, propagate, random_model, steady_state, symmetric_model, ProbVector, RateMatrix,
    ScoreVector,
};
use crate::path_space::eta;

/// Perturbation strength used for the response bounds in sweeps.
pub const DEFAULT_CHI: f64 = 0.01;

/// Generator, initial distribution and the two scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub w: RateMatrix,
    pub p0: ProbVector,
    pub s: ScoreVector,
    pub t: ScoreVector,
}

impl Model {
    pub fn new(w: RateMatrix, p0: ProbVector, s: ScoreVector, t: Option<ScoreVector>) -> Result<Self> {
        w.check_dim(p0.len())?;
        w.check_dim(s.len())?;
        let t = t.unwrap_or_else(|| s.clone());
        w.check_dim(t.len())?;
        Ok(Self { w, p0, s, t })
    }

    /// Random model with `T = S`.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let m = random_model(n, seed)?;
        Ok(Self { w: m.w, p0: m.p0, t: m.s.clone(), s: m.s })
    }

    /// Two states, single decay `2 -> 1` at unit rate, started in state 2,
    /// scores `[-1, 1]`.
    pub fn decay() -> Self {
        let pm = ScoreVector::new(vec![-1.0, 1.0]).expect("valid scores");
        Self {
            w: decay_model(),
            p0: ProbVector::new(vec![0.0, 1.0]).expect("valid distribution"),
            s: pm.clone(),
            t: pm,
        }
    }

    /// Two states, unit rates both ways, started in the steady state,
    /// scores `[-1, 1]`.
    pub fn symmetric() -> Self {
        let pm = ScoreVector::new(vec![-1.0, 1.0]).expect("valid scores");
        Self { w: symmetric_model(), p0: ProbVector::uniform(2), s: pm.clone(), t: pm }
    }

    pub fn n(&self) -> usize {
        self.w.n()
    }
}

/// `start:stop:points:log|lin`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log: bool,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, points: usize, log: bool) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite()) || start < 0.0 || stop < start {
            return Err(Error::BadInterval { t1: start, t2: stop });
        }
        if points == 0 {
            return Err(Error::BadDimension("time grid needs at least one point".into()));
        }
        if log && start <= 0.0 {
            return Err(Error::NonPositiveTime(start));
        }
        Ok(Self { start, stop, points, log })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        let mut v: Vec<f64> = (0..self.points)
            .map(|i| {
                let u = i as f64 / last;
                if self.log {
                    (self.start.ln() + u * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + u * (self.stop - self.start)
                }
            })
            .collect();
        // pin the endpoints against rounding in exp/ln
        v[0] = self.start;
        *v.last_mut().expect("non-empty") = self.stop;
        v
    }
}

impl FromStr for TimeGrid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(format!("time grid `{s}` must look like start:stop:points:log|lin"));
        }
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("bad number `{x}`: {e}"));
        let points = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| format!("bad point count `{}`: {e}", parts[2]))?;
        let log = match parts[3].trim() {
            "log" => true,
            "lin" => false,
            other => return Err(format!("grid spacing must be log or lin, got `{other}`")),
        };
        TimeGrid::new(num(parts[0])?, num(parts[1])?, points, log).map_err(|e| e.to_string())
    }
}

/// `geodesic_arg(0, t_i)` on a sorted grid, accumulated interval by
/// interval.
pub fn geodesic_table(w: &RateMatrix, p0: &ProbVector, times: &[f64]) -> Result<Vec<f64>> {
    check_grid(times)?;
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &t in times {
        acc += geodesic_arg(w, p0, prev, t)?;
        out.push(acc);
        prev = t;
    }
    Ok(out)
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::TimesNotSorted);
    }
    Ok(())
}

/// Evaluates the selected bounds on a sorted grid. Reports are ordered by
/// bound id (catalog order) and then by time.
///
/// Grid conventions: `MAIN_EQ5` compares consecutive grid points; the
/// multipoint bounds use scores `(S, T, S)` at times `(0, t/2, t)`;
/// `DERIV_EQ7` and `PULSE_EQ11` skip `t = 0`; the response bounds are
/// evaluated from the steady state of `W` with strength [`DEFAULT_CHI`].
pub fn evaluate(
    model: &Model,
    ids: &[BoundId],
    times: &[f64],
    mode: CmaxMode,
) -> Result<Vec<BoundReport>> {
    check_grid(times)?;
    let Model { w, p0, s, t: ts } = model;
    let mut ids = ids.to_vec();
    ids.sort();
    ids.dedup();

    let needs_arg = ids.iter().any(|id| {
        matches!(
            id,
            BoundId::MainEq5
                | BoundId::ZeroTEq6
                | BoundId::TangentS29
                | BoundId::MultiSinS40
                | BoundId::OnepointSinS42
                | BoundId::OnepointActivityS45
        )
    });
    let args = if needs_arg { geodesic_table(w, p0, times)? } else { Vec::new() };
    let c: Vec<f64> = times.iter().map(|&t| two_point(w, p0, s, ts, t)).collect::<Result<_>>()?;
    let c0 = two_point(w, p0, s, ts, 0.0)?;
    let k = cmax(s, ts, mode);
    let pst = if ids.iter().any(|id| matches!(id, BoundId::PulseEq11 | BoundId::StepEq12)) {
        Some(steady_state(w)?)
    } else {
        None
    };

    let mut out = Vec::new();
    for id in ids {
        for (i, &t) in times.iter().enumerate() {
            let report = match id {
                BoundId::MainEq5 => {
                    if i == 0 {
                        continue;
                    }
                    let t1 = times[i - 1];
                    let mut r = main_report(c[i - 1], c[i], t1, t, k, args[i] - args[i - 1], mode);
                    r.bound_id = BoundId::MainEq5;
                    r
                }
                BoundId::ZeroTEq6 => main_report(c0, c[i], 0.0, t, k, args[i], mode),
                BoundId::DerivEq7 => {
                    if t == 0.0 {
                        continue;
                    }
                    let dc = correlation_derivative(w, p0, s, ts, t)?;
                    derivative_report(dc, dynamical_activity(w, p0, t)?, t, k, mode)
                }
                BoundId::EtaEq8 => eta_report(c0, c[i], eta(w, p0, t)?, t, k, mode),
                BoundId::TangentS29 => tangent_report(c0, c[i], t, k, args[i], mode),
                BoundId::MultiSinS40 | BoundId::MultiEtaS39 => {
                    let scores = [s.clone(), ts.clone(), s.clone()];
                    let lhs = (equal_time_product(p0, &scores)?
                        - multipoint(w, p0, &scores, &[0.0, 0.5 * t, t])?)
                    .abs();
                    let kp = cmax_product(&scores, mode);
                    if id == BoundId::MultiSinS40 {
                        let mut r = main_report(0.0, lhs, 0.0, t, kp, args[i], mode);
                        r.bound_id = id;
                        r
                    } else {
                        let mut r = eta_report(0.0, lhs, eta(w, p0, t)?, t, kp, mode);
                        r.bound_id = id;
                        r
                    }
                }
                BoundId::OnepointSinS42 | BoundId::OnepointEtaS41 | BoundId::OnepointActivityS45 => {
                    onepoint_from_parts(model, id, t, args.get(i).copied(), mode)?
                }
                BoundId::PulseEq11 => {
                    if t == 0.0 {
                        continue;
                    }
                    let pst = pst.as_ref().expect("computed above");
                    bound_pulse(w, pst, s, ts, DEFAULT_CHI, t, mode)?
                }
                BoundId::StepEq12 => {
                    let pst = pst.as_ref().expect("computed above");
                    bound_step(w, pst, s, ts, DEFAULT_CHI, t, mode)?
                }
            };
            out.push(report);
        }
    }
    Ok(out)
}

fn onepoint_from_parts(
    model: &Model,
    id: BoundId,
    t: f64,
    arg: Option<f64>,
    mode: CmaxMode,
) -> Result<BoundReport> {
    let Model { w, p0, s, .. } = model;
    let pt = propagate(w, p0, t)?;
    let lhs = (s.as_vector().dot(p0.as_vector()) - s.as_vector().dot(pt.as_vector())).abs();
    let k = match mode {
        CmaxMode::Standard => s.max_abs(),
        CmaxMode::Tight => 0.5 * (s.max() - s.min()),
    };
    let activity_rhs = 2.0 * k * dynamical_activity(w, p0, t)?;
    let sine = |arg: f64| {
        let mut r = main_report(0.0, lhs, 0.0, t, k, arg, mode);
        r.bound_id = BoundId::OnepointSinS42;
        r
    };
    Ok(match id {
        BoundId::OnepointEtaS41 => {
            let mut r = eta_report(0.0, lhs, eta(w, p0, t)?, t, k, mode);
            r.bound_id = id;
            r
        }
        BoundId::OnepointSinS42 => {
            let mut r = sine(arg.expect("geodesic table"));
            r.companion_rhs = Some(activity_rhs);
            r
        }
        _ => {
            let sin_rhs = sine(arg.expect("geodesic table")).rhs;
            BoundReport {
                bound_id: BoundId::OnepointActivityS45,
                t1: 0.0,
                t2: t,
                lhs,
                rhs: activity_rhs,
                ratio: ratio(lhs, activity_rhs),
                in_validity_domain: true,
                geodesic_arg: None,
                cmax_mode: mode,
                companion_rhs: Some(sin_rhs),
            }
        }
    })
}

/// Bound ids that apply to an arbitrary (not necessarily stationary) start.
pub const CORRELATION_BOUNDS: [BoundId; 10] = [
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
];

/// Column value of a [`Table`].
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Real(x) => crate::fmt_real(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// A named output table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, columns: &[&'static str]) -> Self {
        Self { name: name.into(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// All values of a real-valued column.
    pub fn reals(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.column(name) else { return Vec::new() };
        self.rows
            .iter()
            .filter_map(|r| match r[i] {
                Cell::Real(x) => Some(x),
                _ => None,
            })
            .collect()
    }
}

/// Bound reports as a table with the standard report columns.
pub fn report_table(name: &str, reports: &[BoundReport]) -> Table {
    let mut table = Table::new(
        name,
        &["bound_id", "t1", "t2", "lhs", "rhs", "ratio", "in_domain", "cmax_mode"],
    );
    for r in reports {
        table.rows.push(vec![
            Cell::Text(r.bound_id.to_string()),
            Cell::Real(r.t1),
            Cell::Real(r.t2),
            Cell::Real(r.lhs),
            Cell::Real(r.rhs),
            Cell::Real(r.ratio),
            Cell::Bool(r.in_validity_domain),
            Cell::Text(r.cmax_mode.to_string()),
        ]);
    }
    table
}

/// Index, size and seed of one generated model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSeed {
    pub index: usize,
    pub n_states: usize,
    pub seed: u64,
}

/// Model `i` has `states[i % states.len()]` states and seed `seed + i`.
pub fn model_seeds(n_models: usize, states: &[usize], seed: u64) -> Vec<ModelSeed> {
    (0..n_models)
        .map(|index| ModelSeed {
            index,
            n_states: states[index % states.len()],
            seed: seed.wrapping_add(index as u64),
        })
        .collect()
}

/// Number of random models in the figure 2 ratio panels.
pub const FIG2_RANDOM_MODELS: usize = 100;
pub const FIG2_STATES: [usize; 3] = [2, 3, 4];
pub const FIG2_DEFAULT_GRID: &str = "0:10:201:lin";
pub const FIG3_DEFAULT_GRID: &str = "0:5:101:lin";

#[derive(Debug, Clone, PartialEq)]
pub struct Figure2 {
    pub a: Table,
    pub b: Table,
    pub c: Table,
    pub d: Table,
    pub seeds: Vec<ModelSeed>,
}

/// Figure 2 tables: (a) `|C(0) - C(t)|` with the sine and eta bounds and
/// (b) `|dC/dt|` with its bound for the decay model; (c) and (d) the
/// corresponding ratios for the decay model and for random models with
/// `T = S`.
pub fn figure2(times: &[f64], n_random: usize, seed: u64, mode: CmaxMode) -> Result<Figure2> {
    check_grid(times)?;
    let fixed = Model::decay();
    let ids = [BoundId::ZeroTEq6, BoundId::DerivEq7, BoundId::EtaEq8];
    let reports = evaluate(&fixed, &ids, times, mode)?;
    let by = |id: BoundId| reports.iter().filter(move |r| r.bound_id == id);

    let mut a = Table::new("fig2a", &["t", "lhs", "rhs_eq6", "in_domain_eq6", "rhs_eq8"]);
    for (sin, et) in by(BoundId::ZeroTEq6).zip(by(BoundId::EtaEq8)) {
        a.rows.push(vec![
            Cell::Real(sin.t2),
            Cell::Real(sin.lhs),
            Cell::Real(sin.rhs),
            Cell::Bool(sin.in_validity_domain),
            Cell::Real(et.rhs),
        ]);
    }
    let mut b = Table::new("fig2b", &["t", "lhs", "rhs_eq7"]);
    for r in by(BoundId::DerivEq7) {
        b.rows.push(vec![Cell::Real(r.t2), Cell::Real(r.lhs), Cell::Real(r.rhs)]);
    }

    let seeds = model_seeds(n_random, &FIG2_STATES, seed);
    let random: Vec<Vec<BoundReport>> = seeds
        .par_iter()
        .map(|m| evaluate(&Model::random(m.n_states, m.seed)?, &ids[..2], times, mode))
        .collect::<Result<_>>()?;

    let columns = ["model", "n_states", "seed", "t", "lhs", "rhs", "ratio", "in_domain"];
    let mut c = Table::new("fig2c", &columns);
    let mut d = Table::new("fig2d", &columns);
    let label = std::iter::once(("fixed".to_string(), 2usize, "none".to_string(), &reports))
        .chain(seeds.iter().zip(&random).map(|(m, r)| {
            (format!("random-{:03}", m.index), m.n_states, m.seed.to_string(), r)
        }));
    for (name, n, seed, reps) in label {
        for r in reps {
            let table = match r.bound_id {
                BoundId::ZeroTEq6 => &mut c,
                BoundId::DerivEq7 => &mut d,
                _ => continue,
            };
            table.rows.push(vec![
                Cell::Text(name.clone()),
                Cell::Int(n as i64),
                Cell::Text(seed.clone()),
                Cell::Real(r.t2),
                Cell::Real(r.lhs),
                Cell::Real(r.rhs),
                Cell::Real(r.ratio),
                Cell::Bool(r.in_validity_domain),
            ]);
        }
    }
    Ok(Figure2 { a, b, c, d, seeds })
}

/// Figure 3 tables: pulse and step response of the symmetric two-state
/// model at strength `chi`. The step grid also contains the domain edge
/// `t = pi^2 / (4 a)`.
pub fn figure3(times: &[f64], chi: f64, mode: CmaxMode) -> Result<(Table, Table)> {
    check_grid(times)?;
    let m = Model::symmetric();
    let a_rate = crate::bounds::activity_rate(&m.w, &m.p0)?;
    let mut step_times = times.to_vec();
    let edge = std::f64::consts::PI.powi(2) / (4.0 * a_rate);
    if times.first().is_some_and(|&t| t <= edge) && times.last().is_some_and(|&t| t >= edge) {
        step_times.push(edge);
        step_times.sort_by(f64::total_cmp);
        step_times.dedup();
    }
    let to_table = |name: &str, kind: ResponseKind, ts: &[f64]| -> Result<Table> {
        let cols: Vec<&'static str> = RESPONSE_CSV_HEADER.split(',').collect();
        let mut table = Table::new(name, &cols);
        for r in response_sweep(&m.w, &m.p0, &m.s, &m.t, chi, kind, ts, mode)? {
            table.rows.push(vec![
                Cell::Real(r.t),
                Cell::Real(r.shift),
                Cell::Real(r.bound_rhs),
                Cell::Real(r.ratio),
                Cell::Bool(r.in_domain),
            ]);
        }
        Ok(table)
    };
    Ok((
        to_table("fig3a", ResponseKind::Pulse, times)?,
        to_table("fig3b", ResponseKind::Step, &step_times)?,
    ))
}

/// Per-bound summary of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TallyEntry {
    pub evaluations: u64,
    pub max_ratio: f64,
    pub violations: u64,
}

pub type Tally = BTreeMap<BoundId, TallyEntry>;

pub fn tally<'a>(reports: impl IntoIterator<Item = &'a BoundReport>) -> Tally {
    let mut out = Tally::new();
    for r in reports {
        let e = out.entry(r.bound_id).or_insert(TallyEntry {
            evaluations: 0,
            max_ratio: 0.0,
            violations: 0,
        });
        e.evaluations += 1;
        e.max_ratio = e.max_ratio.max(r.ratio);
        if !r.passes() {
            e.violations += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressConfig {
    pub n_models: usize,
    pub states: Vec<usize>,
    pub seed: u64,
    pub times: Vec<f64>,
    pub bounds: Vec<BoundId>,
    pub mode: CmaxMode,
}

pub const STRESS_DEFAULT_MODELS: usize = 500;
pub const STRESS_DEFAULT_GRID: &str = "1e-2:10:20:log";

impl Default for StressConfig {
    fn default() -> Self {
        Self {
            n_models: STRESS_DEFAULT_MODELS,
            states: FIG2_STATES.to_vec(),
            seed: 0,
            times: STRESS_DEFAULT_GRID.parse::<TimeGrid>().expect("valid default").values(),
            bounds: BoundId::ALL.to_vec(),
            mode: CmaxMode::Standard,
        }
    }
}

/// Reports for every generated model, in model order. Models are
/// evaluated in parallel; the result does not depend on the thread count.
pub fn stress_reports(config: &StressConfig) -> Result<Vec<(ModelSeed, Vec<BoundReport>)>> {
    if config.states.is_empty() || config.states.iter().any(|&n| n < 2) {
        return Err(Error::BadDimension("state counts must be at least 2".into()));
    }
    check_grid(&config.times)?;
    model_seeds(config.n_models, &config.states, config.seed)
        .into_par_iter()
        .map(|m| {
            let model = Model::random(m.n_states, m.seed)?;
            Ok((m, evaluate(&model, &config.bounds, &config.times, config.mode)?))
        })
        .collect()
}

pub fn stress(config: &StressConfig) -> Result<Tally> {
    let reports = stress_reports(config)?;
    Ok(tally(reports.iter().flat_map(|(_, r)| r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{
        bound_derivative, bound_eta, bound_main, bound_multipoint, bound_onepoint,
        bound_tangent_tur, MultipointVariant, OnepointVariant,
    };

    #[test]
    fn grid_parsing() {
        let g: TimeGrid = "1e-2:10:20:log".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 20);
        assert_eq!((v[0], v[19]), (1e-2, 10.0));
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        let v = "0:1:3:lin".parse::<TimeGrid>().unwrap().values();
        assert_eq!(v, vec![0.0, 0.5, 1.0]);
        assert!("0:1:3:log".parse::<TimeGrid>().is_err());
        assert!("1:0:3:lin".parse::<TimeGrid>().is_err());
        assert!("0:1:3".parse::<TimeGrid>().is_err());
        assert!("0:1:0:lin".parse::<TimeGrid>().is_err());
    }

    #[test]
    fn grid_evaluation_matches_direct_calls() {
        let m = Model::random(3, 11).unwrap();
        let times = [0.0, 0.05, 0.4, 1.3, 6.0];
        for mode in [CmaxMode::Standard, CmaxMode::Tight] {
            let reports = evaluate(&m, &BoundId::ALL, &times, mode).unwrap();
            for r in &reports {
                let t = r.t2;
                let direct = match r.bound_id {
                    BoundId::MainEq5 | BoundId::ZeroTEq6 => {
                        bound_main(&m.w, &m.p0, &m.s, &m.t, r.t1, t, mode).unwrap()
                    }
                    BoundId::DerivEq7 => bound_derivative(&m.w, &m.p0, &m.s, &m.t, t, mode).unwrap(),
                    BoundId::EtaEq8 => bound_eta(&m.w, &m.p0, &m.s, &m.t, t, mode).unwrap(),
                    BoundId::TangentS29 => bound_tangent_tur(&m.w, &m.p0, &m.s, &m.t, t, mode).unwrap(),
                    BoundId::MultiSinS40 | BoundId::MultiEtaS39 => {
                        let v = if r.bound_id == BoundId::MultiSinS40 {
                            MultipointVariant::Sin
                        } else {
                            MultipointVariant::Eta
                        };
                        let scores = [m.s.clone(), m.t.clone(), m.s.clone()];
                        bound_multipoint(&m.w, &m.p0, &scores, &[0.0, t / 2.0, t], v, mode).unwrap()
                    }
                    BoundId::OnepointSinS42 | BoundId::OnepointEtaS41 | BoundId::OnepointActivityS45 => {
                        let v = match r.bound_id {
                            BoundId::OnepointSinS42 => OnepointVariant::Sin,
                            BoundId::OnepointEtaS41 => OnepointVariant::Eta,
                            _ => OnepointVariant::Activity,
                        };
                        bound_onepoint(&m.w, &m.p0, &m.s, t, v, mode).unwrap()
                    }
                    BoundId::PulseEq11 | BoundId::StepEq12 => continue,
                };
                if r.t1 != 0.0 || r.bound_id != BoundId::MainEq5 {
                    assert_eq!(direct.bound_id, r.bound_id);
                }
                assert!((direct.lhs - r.lhs).abs() < 1e-12, "{r:?} vs {direct:?}");
                assert!(direct.rhs == r.rhs || (direct.rhs - r.rhs).abs() < 1e-8, "{r:?} vs {direct:?}");
                assert_eq!(direct.in_validity_domain, r.in_validity_domain);
            }
        }
    }

    #[test]
    fn evaluate_ordering_and_skips() {
        let m = Model::decay();
        let reports =
            evaluate(&m, &[BoundId::EtaEq8, BoundId::DerivEq7, BoundId::MainEq5], &[0.0, 1.0, 2.0], CmaxMode::Standard)
                .unwrap();
        let ids: Vec<_> = reports.iter().map(|r| (r.bound_id, r.t2)).collect();
        assert_eq!(
            ids,
            vec![
                (BoundId::MainEq5, 1.0),
                (BoundId::MainEq5, 2.0),
                (BoundId::DerivEq7, 1.0),
                (BoundId::DerivEq7, 2.0),
                (BoundId::EtaEq8, 0.0),
                (BoundId::EtaEq8, 1.0),
                (BoundId::EtaEq8, 2.0),
            ]
        );
        assert!(evaluate(&m, &[BoundId::EtaEq8], &[1.0, 0.5], CmaxMode::Standard).is_err());
    }

    #[test]
    fn figure2_fixed_rows() {
        let times = "0:10:11:lin".parse::<TimeGrid>().unwrap().values();
        let fig = figure2(&times, 6, 42, CmaxMode::Standard).unwrap();
        let lhs = fig.a.reals("lhs");
        assert_eq!(lhs[0], 0.0);
        assert!((lhs[1] - 2.0 * (1.0 - (-1.0_f64).exp())).abs() < 1e-12);
        assert_eq!(fig.b.rows.len(), 10);
        assert_eq!(fig.c.rows.len(), 7 * 11);
        assert_eq!(fig.d.rows.len(), 7 * 10);
        assert!(fig.c.reals("ratio").iter().all(|&r| r <= 1.0 + 1e-9));
        assert!(fig.d.reals("ratio").iter().all(|&r| r <= 1.0 + 1e-9));
        assert_eq!(fig.seeds.len(), 6);
        assert_eq!(fig.seeds[4], ModelSeed { index: 4, n_states: 3, seed: 46 });
    }

    #[test]
    fn figure3_rows() {
        let times = FIG3_DEFAULT_GRID.parse::<TimeGrid>().unwrap().values();
        let (a, b) = figure3(&times, 0.01, CmaxMode::Standard).unwrap();
        assert_eq!(a.rows.len(), times.len() - 1);
        let t = a.reals("t");
        let i = t.iter().position(|&x| x == 1.0).unwrap();
        assert!((a.reals("shift")[i] + 0.02 * (-2.0_f64).exp()).abs() < 1e-15);
        assert!((a.reals("bound_rhs")[i] - 0.01).abs() < 1e-15);
        let tb = b.reals("t");
        let edge = std::f64::consts::PI.powi(2) / 4.0;
        let j = tb.iter().position(|&x| x == edge).unwrap();
        assert!((b.reals("bound_rhs")[j] - 0.02).abs() < 1e-15);
        let flag = b.column("in_domain").unwrap();
        assert_eq!(b.rows[j + 1][flag], Cell::Bool(false));
        assert_eq!(b.reals("shift")[0], 0.0);
        assert_eq!(b.reals("bound_rhs")[0], 0.0);
    }

    #[test]
    fn stress_is_deterministic_and_passes() {
        let config = StressConfig { n_models: 12, ..StressConfig::default() };
        let a = stress(&config).unwrap();
        let b = stress(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), BoundId::ALL.len());
        for (id, e) in &a {
            assert_eq!(e.violations, 0, "{id}");
        }
        let empty = stress(&StressConfig { n_models: 0, ..StressConfig::default() }).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn table_csv_shape() {
        let m = Model::decay();
        let reports = evaluate(&m, &[BoundId::EtaEq8], &[0.0, 1.0], CmaxMode::Tight).unwrap();
        let csv = report_table("check", &reports).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], crate::bounds::BOUND_CSV_HEADER);
        assert_eq!(lines[2], reports[1].csv());
    }
}
