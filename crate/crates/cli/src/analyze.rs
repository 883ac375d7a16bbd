//! `precrash analyze ...`: every subcommand prints one JSON document.

use std::path::{Path, PathBuf};

use clap::Subcommand;
use precrash_analysis::{
    fidelity_score, mean_by_simulator, paired_t_test, parse_responses, preference_tally,
    sickness_by_pair, welch_t_test, Controls, FidelityConfig, FinalQuestionnaire, MotionBase, Visual,
};
use serde::de::DeserializeOwned;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ColumnError {
    #[error("column spec {0:?} must look like <file.csv>:<column>")]
    Spec(String),
    #[error("{file}: no column {column:?}")]
    NoColumn { file: String, column: String },
    #[error("{file} row {row}: {value:?} is not a number")]
    NotANumber { file: String, row: usize, value: String },
    #[error("{file} row {row}: empty cell in a paired test")]
    EmptyCell { file: String, row: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn snake<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
pub enum AnalyzeCmd {
    /// Sickness subscores from pre/post questionnaires.
    Sickness {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Two-sample t-test on CSV columns given as `<file.csv>:<column>`.
    Ttest {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Pair rows by position instead of Welch's unequal-variance test.
        #[arg(long)]
        paired: bool,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Fidelity rubric score out of 15.
    Fidelity {
        /// none | three_dof | six_dof_plus
        #[arg(long, value_parser = snake::<MotionBase>)]
        motion: MotionBase,
        /// single_flat | triple_flat | surround_or_hmd
        #[arg(long, value_parser = snake::<Visual>)]
        visual: Visual,
        /// keyboard_or_gamepad | wheel_with_seat | full_cab
        #[arg(long, value_parser = snake::<Controls>)]
        controls: Controls,
    },
    /// Preference counts and proportions from the final questionnaire.
    Prefs {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

/// Numeric cells of one column. The column is a header name or a 0-based index.
pub fn read_column(spec: &str, keep_empty_as_error: bool) -> Result<Vec<f64>, ColumnError> {
    let (file, column) = spec.rsplit_once(':').ok_or_else(|| ColumnError::Spec(spec.to_string()))?;
    let mut rdr = csv::Reader::from_path(Path::new(file))?;
    let headers = rdr.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .or_else(|| column.parse::<usize>().ok().filter(|&i| i < headers.len()))
        .ok_or_else(|| ColumnError::NoColumn { file: file.into(), column: column.into() })?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(idx).unwrap_or("").trim();
        let row = i + 2;
        if cell.is_empty() {
            if keep_empty_as_error {
                return Err(ColumnError::EmptyCell { file: file.into(), row });
            }
            continue;
        }
        let v = cell.parse::<f64>().map_err(|_| ColumnError::NotANumber {
            file: file.into(),
            row,
            value: cell.into(),
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn run(cmd: AnalyzeCmd) -> Result<(), Box<dyn std::error::Error>> {
    let out = match cmd {
        AnalyzeCmd::Sickness { input } => {
            let responses = parse_responses(&std::fs::read_to_string(&input)?)?;
            let pairs = sickness_by_pair(&responses)?;
            json!({"pairs": pairs, "by_simulator": mean_by_simulator(&pairs)})
        }
        AnalyzeCmd::Ttest { a, b, paired, alpha } => {
            let xa = read_column(&a, paired)?;
            let xb = read_column(&b, paired)?;
            let r = if paired { paired_t_test(&xa, &xb, alpha)? } else { welch_t_test(&xa, &xb, alpha)? };
            let mut v = serde_json::to_value(r)?;
            v["test"] = json!(if paired { "paired" } else { "welch" });
            v["n_a"] = json!(xa.len());
            v["n_b"] = json!(xb.len());
            v
        }
        AnalyzeCmd::Fidelity { motion, visual, controls } => {
            let cfg = FidelityConfig { motion_base: motion, visual, controls };
            json!({"config": cfg, "score": fidelity_score(cfg), "max": 15})
        }
        AnalyzeCmd::Prefs { input } => {
            let q: FinalQuestionnaire = serde_json::from_str(&std::fs::read_to_string(&input)?)?;
            serde_json::to_value(preference_tally(&q)?)?
        }
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn columns_by_name_or_index() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "participant,vr,flat\np1,7,4\np2,8,\np3,6.5,5").unwrap();
        let path = f.path().display().to_string();
        assert_eq!(read_column(&format!("{path}:vr"), false).unwrap(), [7.0, 8.0, 6.5]);
        assert_eq!(read_column(&format!("{path}:2"), false).unwrap(), [4.0, 5.0]);
        assert!(matches!(read_column(&format!("{path}:flat"), true), Err(ColumnError::EmptyCell { row: 3, .. })));
        assert!(matches!(read_column(&format!("{path}:nope"), false), Err(ColumnError::NoColumn { .. })));
        assert!(matches!(read_column(&format!("{path}:participant"), false), Err(ColumnError::NotANumber { .. })));
        assert!(matches!(read_column("nocolon", false), Err(ColumnError::Spec(_))));
    }
}
