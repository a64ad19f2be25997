//! File formats.
//!
//! * Dataset: CSV with header `id,x1,...,xd,y`, values `0`/`1`, LF line endings.
//! * Truth: canonical JSON (sorted keys, no whitespace) with fields
//!   `confounders`, `k`, `prevalences`, `relevant`, `salt`, `schema_version`, `seed`.
//! * Submission: JSON `{team, selected, method_report}`, or plain text with
//!   whitespace-separated 1-based indices (the team label is the file stem).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use contest_core::{
    BinaryMatrix, Confounder, Dataset, GroundTruth, PValueTable, ScoreReport, Submission,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, Result};

pub const TRUTH_SCHEMA_VERSION: u32 = 1;

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn dataset_to_csv(data: &Dataset) -> String {
    let d = data.d();
    let mut out = String::with_capacity((data.n() + 1) * (2 * d + 8));
    out.push_str("id");
    for j in 1..=d {
        let _ = write!(out, ",x{j}");
    }
    out.push_str(",y\n");
    for i in 0..data.n() {
        let _ = write!(out, "{}", i + 1);
        for &v in data.x.row(i) {
            out.push(',');
            out.push(if v == 1 { '1' } else { '0' });
        }
        out.push(',');
        out.push(if data.y[i] == 1 { '1' } else { '0' });
        out.push('\n');
    }
    out
}

pub fn dataset_from_csv(text: &str, path: &Path) -> Result<Dataset> {
    let err = |msg: String| CliError::parse(path, msg);
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| err("empty dataset file".into()))?
        .split(',')
        .collect();
    let d = header.len().saturating_sub(2);
    let expected: Vec<String> = std::iter::once("id".to_string())
        .chain((1..=d).map(|j| format!("x{j}")))
        .chain(std::iter::once("y".to_string()))
        .collect();
    if header.len() < 3 || header != expected {
        return Err(err(format!(
            "header must be id,x1,...,xd,y, found '{}'",
            header.join(",")
        )));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (offset, line) in lines.enumerate() {
        let row = offset + 1;
        if line.is_empty() {
            return Err(err(format!("row {row}: empty line")));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 2 {
            return Err(err(format!(
                "row {row}: expected {} fields, found {}",
                d + 2,
                fields.len()
            )));
        }
        if fields[0].parse::<u64>().is_err() {
            return Err(err(format!(
                "row {row}, column id: '{}' is not an id",
                fields[0]
            )));
        }
        for (j, field) in fields[1..].iter().enumerate() {
            let value = match *field {
                "0" => 0u8,
                "1" => 1u8,
                other => {
                    return Err(err(format!(
                        "row {row}, column {}: expected 0 or 1, found '{other}'",
                        expected[j + 1]
                    )))
                }
            };
            if j < d {
                x.push(value);
            } else {
                y.push(value);
            }
        }
    }
    let n = y.len();
    Ok(Dataset::new(BinaryMatrix::new(n, d, x)?, y)?)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    dataset_from_csv(&read_file(path)?, path)
}

/// Latent confounder columns for instructor diagnostics, one row per dataset row.
pub fn latent_to_csv(latent: &BinaryMatrix) -> String {
    let mut out = String::from("id");
    for c in 1..=latent.ncols() {
        let _ = write!(out, ",c{c}");
    }
    out.push('\n');
    for i in 0..latent.nrows() {
        let _ = write!(out, "{}", i + 1);
        for &v in latent.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelevantEntry {
    index: usize,
    log_or: f64,
}

/// Parsed truth file: the answer key plus the data needed to reproduce and verify it.
#[derive(Clone, Debug, PartialEq)]
pub struct SealedTruth {
    pub truth: GroundTruth,
    pub seed: u64,
    pub salt: [u8; 16],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthFile {
    schema_version: u32,
    seed: u64,
    k: usize,
    relevant: Vec<RelevantEntry>,
    confounders: Vec<Confounder>,
    prevalences: Vec<f64>,
    salt: String,
}

fn truth_value(truth: &GroundTruth, seed: u64) -> Value {
    let relevant: Vec<Value> = truth
        .effects
        .iter()
        .map(|(&index, &log_or)| json!({ "index": index, "log_or": log_or }))
        .collect();
    let confounders: Vec<Value> = truth
        .confounders
        .iter()
        .map(|c| json!({ "linked": c.linked, "log_or": c.log_or, "prevalence": c.prevalence }))
        .collect();
    json!({
        "confounders": confounders,
        "k": truth.k(),
        "prevalences": truth.prevalences,
        "relevant": relevant,
        "schema_version": TRUTH_SCHEMA_VERSION,
        "seed": seed,
    })
}

/// Canonical bytes of the truth without its salt; this is what the commitment hashes.
pub fn canonical_truth(truth: &GroundTruth, seed: u64) -> String {
    truth_value(truth, seed).to_string()
}

pub fn truth_to_json(sealed: &SealedTruth) -> String {
    let mut value = truth_value(&sealed.truth, sealed.seed);
    value
        .as_object_mut()
        .expect("truth serializes to an object")
        .insert("salt".into(), Value::String(hex::encode(sealed.salt)));
    value.to_string()
}

pub fn truth_from_json(text: &str, path: &Path) -> Result<SealedTruth> {
    let err = |msg: String| CliError::parse(path, msg);
    let file: TruthFile =
        serde_json::from_str(text).map_err(|e| err(format!("invalid truth file: {e}")))?;
    if file.schema_version != TRUTH_SCHEMA_VERSION {
        return Err(err(format!(
            "unsupported schema_version {}",
            file.schema_version
        )));
    }
    if file.k != file.relevant.len() {
        return Err(err(format!(
            "k = {} but {} relevant entries",
            file.k,
            file.relevant.len()
        )));
    }
    let effects: BTreeMap<usize, f64> = file.relevant.iter().map(|r| (r.index, r.log_or)).collect();
    if effects.len() != file.relevant.len() {
        return Err(err("duplicate relevant index".into()));
    }
    let salt: [u8; 16] = hex::decode(&file.salt)
        .ok()
        .and_then(|bytes| bytes.try_into().ok())
        .ok_or_else(|| err("salt must be 32 hex digits".into()))?;
    let truth = GroundTruth {
        effects,
        confounders: file.confounders,
        prevalences: file.prevalences,
    };
    truth.validate(None)?;
    Ok(SealedTruth {
        truth,
        seed: file.seed,
        salt,
    })
}

pub fn read_truth(path: &Path) -> Result<SealedTruth> {
    truth_from_json(&read_file(path)?, path)
}

pub fn submission_to_json(sub: &Submission) -> String {
    let mut text = serde_json::to_string_pretty(sub).expect("submissions always serialize");
    text.push('\n');
    text
}

/// JSON submission, or whitespace-separated indices labelled by the file stem.
pub fn submission_from_text(text: &str, path: &Path) -> Result<Submission> {
    let err = |msg: String| CliError::parse(path, msg);
    let sub = if text.trim_start().starts_with('{') {
        let raw: Submission =
            serde_json::from_str(text).map_err(|e| err(format!("invalid submission: {e}")))?;
        let normalized =
            Submission::new(raw.team.clone(), raw.selected.clone()).with_report(raw.method_report);
        if normalized.selected.len() != raw.selected.len() {
            return Err(err("submission lists a variable twice".into()));
        }
        normalized
    } else {
        let mut selected = Vec::new();
        for token in text.split_whitespace() {
            let index = token
                .parse::<usize>()
                .map_err(|_| err(format!("'{token}' is not a variable index")))?;
            selected.push(index);
        }
        let count = selected.len();
        let team = path
            .file_stem()
            .map_or("submission".into(), |s| s.to_string_lossy().into_owned());
        let sub = Submission::new(team, selected);
        if sub.selected.len() != count {
            return Err(err("submission lists a variable twice".into()));
        }
        sub
    };
    Ok(sub)
}

pub fn read_submission(path: &Path) -> Result<Submission> {
    submission_from_text(&read_file(path)?, path)
}

/// `variable,resample_1,...` rows for external boxplots.
pub fn pvalues_to_csv(table: &PValueTable) -> String {
    let resamples = table.values.first().map_or(0, Vec::len);
    let mut out = String::from("variable");
    for r in 1..=resamples {
        let _ = write!(out, ",r{r}");
    }
    out.push('\n');
    for (j, row) in table.values.iter().enumerate() {
        let _ = write!(out, "{}", j + 1);
        for p in row {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
    }
    out
}

fn percent_cell(value: Option<u32>) -> String {
    value.map_or_else(|| "NA".into(), |p| p.to_string())
}

/// Leaderboard CSV; reports are expected in rank order.
pub fn reports_to_csv(reports: &[ScoreReport]) -> String {
    let mut out = String::from("rank,team,tp,fp,tn,fn,tpr_pct,tnr_pct,score\n");
    for (rank, r) in reports.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            rank + 1,
            r.team,
            r.tp,
            r.fp,
            r.tn,
            r.fn_,
            percent_cell(r.tpr_percent()),
            percent_cell(r.tnr_percent()),
            r.score
        );
    }
    out
}

/// Console table with the classroom result columns.
pub fn reports_table(reports: &[ScoreReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.team.len())
        .max()
        .unwrap_or(0)
        .max(4);
    let mut out = format!(
        "{:<width$}  {:>14}  {:>14}  {:>6}\n",
        "Team", "True positives", "True negatives", "Score"
    );
    for r in reports {
        let pct = |p: Option<u32>| p.map_or_else(|| "NA".to_string(), |v| format!("{v}%"));
        let _ = writeln!(
            out,
            "{:<width$}  {:>14}  {:>14}  {:>6}",
            r.team,
            pct(r.tpr_percent()),
            pct(r.tnr_percent()),
            r.score
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn here() -> PathBuf {
        PathBuf::from("test.csv")
    }

    #[test]
    fn dataset_csv_layout() {
        let x = BinaryMatrix::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
        let data = Dataset::new(x, vec![1, 0]).unwrap();
        let text = dataset_to_csv(&data);
        assert_eq!(text, "id,x1,x2,y\n1,1,0,1\n2,0,1,0\n");
        assert_eq!(dataset_from_csv(&text, &here()).unwrap(), data);
    }

    #[test]
    fn non_binary_cell_names_row_and_column() {
        let err = dataset_from_csv("id,x1,x2,y\n1,1,0,1\n2,0,2,0\n", &here()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2, column x2"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bad_header_and_short_rows_are_rejected() {
        assert!(dataset_from_csv("id,a,y\n", &here()).is_err());
        assert!(dataset_from_csv("id,x1,y\n1,0\n", &here()).is_err());
        assert!(dataset_from_csv("", &here()).is_err());
    }

    #[test]
    fn truth_json_is_canonical() {
        let truth = GroundTruth {
            effects: [(3, -0.9), (6, -0.72)].into_iter().collect(),
            confounders: vec![Confounder {
                log_or: 0.7,
                linked: vec![1, 2],
                prevalence: 0.01,
            }],
            prevalences: vec![0.03, 0.02, 0.01, 0.005, 0.004, 0.002],
        };
        let sealed = SealedTruth {
            truth,
            seed: 42,
            salt: [7; 16],
        };
        let text = truth_to_json(&sealed);
        assert!(!text.contains(' ') && !text.contains('\n'));
        assert!(text.starts_with(
            r#"{"confounders":[{"linked":[1,2],"log_or":0.7,"prevalence":0.01}],"k":2,"#
        ));
        assert!(text.contains(
            r#""relevant":[{"index":3,"log_or":-0.9},{"index":6,"log_or":-0.72}],"salt":"07070707"#
        ));
        assert!(text.ends_with(r#","schema_version":1,"seed":42}"#));
        assert_eq!(truth_from_json(&text, &here()).unwrap(), sealed);
    }

    #[test]
    fn truth_with_wrong_k_is_rejected() {
        let text = r#"{"confounders":[],"k":2,"prevalences":[0.03,0.01],"relevant":[{"index":1,"log_or":1.0}],"salt":"00000000000000000000000000000000","schema_version":1,"seed":1}"#;
        assert!(truth_from_json(text, &here()).is_err());
    }

    #[test]
    fn plain_text_submission() {
        let sub = submission_from_text("3 6\n8\n", Path::new("dir/team_b.txt")).unwrap();
        assert_eq!(sub.team, "team_b");
        assert_eq!(sub.selected, vec![3, 6, 8]);
        assert!(submission_from_text("3 x", &here()).is_err());
        assert!(submission_from_text("3 3", &here()).is_err());
    }

    #[test]
    fn json_submission_round_trip() {
        let sub = Submission::new("A", vec![20, 3]).with_report("note".into());
        let back = submission_from_text(&submission_to_json(&sub), &here()).unwrap();
        assert_eq!(back, sub);
        let text = r#"{"team":"x","selected":[1,1]}"#;
        assert!(submission_from_text(text, &here()).is_err());
    }

    #[test]
    fn console_table_formats_percentages() {
        let r = ScoreReport {
            team: "A".into(),
            tp: 4,
            fp: 2,
            tn: 11,
            fn_: 3,
            tpr: Some(4.0 / 7.0),
            tnr: Some(11.0 / 13.0),
            score: 44.0,
        };
        let table = reports_table(std::slice::from_ref(&r));
        assert!(table.lines().nth(1).unwrap().contains("57%"));
        assert!(table.lines().nth(1).unwrap().contains("85%"));
        assert!(table.lines().nth(1).unwrap().ends_with("44"));
        assert_eq!(
            reports_to_csv(&[r]),
            "rank,team,tp,fp,tn,fn,tpr_pct,tnr_pct,score\n1,A,4,2,11,3,57,85,44\n"
        );
    }
}
