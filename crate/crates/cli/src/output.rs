//! CSV/JSON emission and metadata sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use corrbound::sweep::{Cell, ModelSeed, Table, Tally};
use corrbound::{bounds, fmt_real, linear_response, markov, VERSION};
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// A real as a bare JSON number with 17 significant digits. Non-finite
/// values become the strings `"inf"`, `"-inf"`, `"nan"`.
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(fmt_real(self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else if self.0.is_nan() {
            s.serialize_str("nan")
        } else {
            s.serialize_str(&fmt_real(self.0))
        }
    }
}

struct CellJson<'a>(&'a Cell);

impl Serialize for CellJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Cell::Real(x) => Real(*x).serialize(s),
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Bool(b) => s.serialize_bool(*b),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

struct RowJson<'a>(&'a [&'static str], &'a [Cell]);

impl Serialize for RowJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(k, &CellJson(v))?;
        }
        map.end()
    }
}

struct TableJson<'a>(&'a Table);

impl Serialize for TableJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.rows.len()))?;
        for row in &self.0.rows {
            seq.serialize_element(&RowJson(&self.0.columns, row))?;
        }
        seq.end()
    }
}

pub fn render_table(table: &Table, format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&TableJson(table))
                .map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            s
        }
    })
}

struct TallyJson<'a>(&'a Tally);

impl Serialize for TallyJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry {
            evaluations: u64,
            max_ratio: Real,
            violations: u64,
        }
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (id, e) in self.0 {
            map.serialize_entry(
                id.as_str(),
                &Entry { evaluations: e.evaluations, max_ratio: Real(e.max_ratio), violations: e.violations },
            )?;
        }
        map.end()
    }
}

pub fn render_tally(tally: &Tally) -> String {
    let mut s = serde_json::to_string_pretty(&TallyJson(tally)).expect("tally serializes");
    s.push('\n');
    s
}

/// Contents of `<file>.meta.json`.
#[derive(Serialize)]
pub struct Meta<'a> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: Option<u64>,
    pub generator: &'static str,
    pub tolerances: Tolerances,
    pub cmax_mode: &'a str,
    pub t_grid: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi: Option<Real>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub random_models: Vec<SeedJson>,
}

impl<'a> Meta<'a> {
    pub fn new(command: &'a str, cmax_mode: &'a str) -> Self {
        Self {
            artifact: "corrbound",
            version: VERSION,
            command,
            seed: None,
            generator: markov::GENERATOR_NAME,
            tolerances: Tolerances::default(),
            cmax_mode,
            t_grid: None,
            model: None,
            chi: None,
            random_models: Vec::new(),
        }
    }
}

#[derive(Serialize)]
pub struct Tolerances {
    pub ratio_slack: Real,
    pub geodesic_abs: Real,
    pub steady_start: Real,
    pub steady_residual: Real,
    pub prob_sum: Real,
    pub oracle_step_factor: Real,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ratio_slack: Real(bounds::RATIO_SLACK),
            geodesic_abs: Real(bounds::GEODESIC_TOL),
            steady_start: Real(bounds::STEADY_TOL),
            steady_residual: Real(linear_response::STEADY_RESIDUAL_TOL),
            prob_sum: Real(markov::PROB_SUM_TOL),
            oracle_step_factor: Real(linear_response::ORACLE_STEP_FACTOR),
        }
    }
}

#[derive(Serialize)]
pub struct SeedJson {
    pub index: usize,
    pub n_states: usize,
    pub seed: u64,
}

impl From<&ModelSeed> for SeedJson {
    fn from(m: &ModelSeed) -> Self {
        Self { index: m.index, n_states: m.n_states, seed: m.seed }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Writes `contents` to `dir/stem.ext` and its metadata to
/// `dir/stem.ext.meta.json`. Returns the data file path.
pub fn write_with_meta(
    dir: &Path,
    stem: &str,
    ext: &str,
    contents: &str,
    meta: &Meta<'_>,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(format!("{stem}.{ext}"));
    write(&path, contents)?;
    let mut meta_json = serde_json::to_string_pretty(meta).map_err(|e| CliError::Io(e.to_string()))?;
    meta_json.push('\n');
    write(&dir.join(format!("{stem}.{ext}.meta.json")), &meta_json)?;
    Ok(path)
}
