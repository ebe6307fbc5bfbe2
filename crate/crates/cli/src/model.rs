//! Model files.

use std::path::Path;

use corrbound::sweep::Model;
use corrbound::{ProbVector, RateMatrix, ScoreVector};
use serde::Deserialize;

use crate::CliError;

/// `{"n": 2, "rates": [[..], [..]], "p0": [..], "S": [..], "T": [..]}`.
/// `rates[nu][mu]` is the rate of `mu -> nu`; the diagonal is ignored and
/// `T` defaults to `S`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    pub rates: Vec<Vec<f64>>,
    pub p0: Vec<f64>,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    #[serde(rename = "T", default)]
    pub t: Option<Vec<f64>>,
}

impl ModelFile {
    pub fn into_model(self) -> Result<Model, CliError> {
        if self.rates.len() != self.n {
            return Err(CliError::Input(format!(
                "\"n\" is {} but \"rates\" has {} rows",
                self.n,
                self.rates.len()
            )));
        }
        let w = RateMatrix::new(&self.rates)?;
        let p0 = ProbVector::new(self.p0)?;
        let s = ScoreVector::new(self.s)?;
        let t = self.t.map(ScoreVector::new).transpose()?;
        Ok(Model::new(w, p0, s, t)?)
    }
}

pub fn parse_model(text: &str) -> Result<Model, CliError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("model file: {e}")))?;
    file.into_model()
}

pub fn load_model(path: &Path) -> Result<Model, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text)
}
