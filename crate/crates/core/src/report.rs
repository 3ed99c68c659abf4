//! Signed-margin reports shared by all inequality checkers.

use serde::Serialize;

/// Outcome of one inequality check over a batch of cases.
///
/// Margins are signed as `RHS - LHS` of the inequality being verified, so a
/// nonnegative margin means the inequality held on that case. The check
/// passes iff the minimum margin stays above `-tolerance`. An empty case
/// list is a vacuous pass.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub name: String,
    #[serde(skip)]
    pub margins: Vec<f64>,
    pub min_margin: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub cases: usize,
}

impl InequalityReport {
    pub fn from_margins(name: impl Into<String>, margins: Vec<f64>, tolerance: f64) -> Self {
        let min_margin = margins.iter().copied().fold(None, |acc: Option<f64>, m| {
            Some(match acc {
                Some(a) => a.min(m),
                None => m,
            })
        });
        let pass = match min_margin {
            Some(m) => m >= -tolerance,
            None => true,
        };
        InequalityReport {
            name: name.into(),
            cases: margins.len(),
            margins,
            min_margin,
            tolerance,
            pass,
        }
    }
}
