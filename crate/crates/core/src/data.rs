//! Datasets: the bundled glass-fibre strengths and a small CSV reader.

use std::path::Path;

use crate::error::{GpsError, Result};
use crate::estimation::{CensoredSample, ObservedSample};

/// Strengths of 63 glass fibres of length 1.5 cm (National Physical Laboratory).
pub const GLASS_FIBRES: [f64; 63] = [
    0.55, 0.93, 1.25, 1.36, 1.49, 1.52, 1.58, 1.61, 1.64, 1.68, 1.73, 1.81, 2.00, 0.74, 1.04, 1.27, 1.39, 1.49, 1.53,
    1.59, 1.61, 1.66, 1.68, 1.76, 1.82, 2.01, 0.77, 1.11, 1.28, 1.42, 1.50, 1.54, 1.60, 1.62, 1.66, 1.69, 1.76, 1.84,
    2.24, 0.81, 1.13, 1.29, 1.48, 1.50, 1.55, 1.61, 1.62, 1.66, 1.70, 1.77, 1.84, 0.84, 1.24, 1.30, 1.48, 1.51, 1.55,
    1.61, 1.63, 1.67, 1.70, 1.78, 1.89,
];

pub fn glass_fibres() -> ObservedSample {
    ObservedSample::new(GLASS_FIBRES.to_vec()).expect("bundled data is valid")
}

/// Parsed lifetime table: one value column and an optional event column
/// (`1` = failure, `0` = right-censored).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub values: Vec<f64>,
    pub events: Option<Vec<bool>>,
}

impl Dataset {
    /// Accepts comma, semicolon, tab or space separated rows. Blank lines and
    /// `#` comments are skipped; a first row that does not parse as numbers is
    /// taken as a header.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        let mut events: Vec<bool> = Vec::new();
        let mut width = None;
        let mut seen_row = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> =
                line.split([',', ';', '\t', ' ']).map(str::trim).filter(|f| !f.is_empty()).collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            let nums = match parsed {
                Ok(v) => v,
                Err(_) if !seen_row => {
                    seen_row = true;
                    continue;
                }
                Err(_) => {
                    return Err(GpsError::InvalidData(format!("line {}: cannot parse '{line}'", lineno + 1)));
                }
            };
            seen_row = true;
            if nums.is_empty() || nums.len() > 2 {
                return Err(GpsError::InvalidData(format!("line {}: expected 1 or 2 columns", lineno + 1)));
            }
            match width {
                None => width = Some(nums.len()),
                Some(w) if w != nums.len() => {
                    return Err(GpsError::InvalidData(format!("line {}: inconsistent column count", lineno + 1)));
                }
                _ => {}
            }
            values.push(nums[0]);
            if nums.len() == 2 {
                let e = match nums[1] {
                    v if v == 1.0 => true,
                    v if v == 0.0 => false,
                    v => {
                        return Err(GpsError::InvalidData(format!(
                            "line {}: event indicator must be 0 or 1, got {v}",
                            lineno + 1
                        )))
                    }
                };
                events.push(e);
            }
        }
        if values.is_empty() {
            return Err(GpsError::InvalidData("no observations found".into()));
        }
        let events = if width == Some(2) { Some(events) } else { None };
        Ok(Self { values, events })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn is_censored(&self) -> bool {
        self.events.as_ref().is_some_and(|e| e.iter().any(|&x| !x))
    }

    pub fn to_observed(&self) -> Result<ObservedSample> {
        ObservedSample::new(self.values.clone())
    }

    pub fn to_censored(&self) -> Result<CensoredSample> {
        let events = self.events.clone().unwrap_or_else(|| vec![true; self.values.len()]);
        CensoredSample::new(self.values.clone(), events)
    }
}
