//! File formats shared by the CLI: schedule CSV, gradient-norm logs
//! (CSV or JSON-lines), bound reports, run logs, and results tables.
//!
//! Floats are written with the shortest decimal that round-trips, so a
//! schedule written and re-read is value-identical bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lab::RunReport;
use crate::refine::{GradientNormLog, NormKind};
use crate::schedule::Schedule;

// ---------------------------------------------------------------------------
// Schedule CSV: header `step,multiplier`, steps 1..T
// ---------------------------------------------------------------------------

pub fn schedule_to_csv(schedule: &Schedule) -> String {
    let mut out = String::from("step,multiplier\n");
    for (i, v) in schedule.values().iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, v);
    }
    out
}

pub fn schedule_from_csv(text: &str) -> Result<Schedule> {
    let mut values = Vec::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "step,multiplier" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "expected header 'step,multiplier'".into(),
            })
        }
    }
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut cols = raw.split(',');
        let step = parse_step(cols.next(), line)?;
        if step != values.len() as u64 + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected step {}, got {step}", values.len() + 1),
            });
        }
        let value = parse_float(cols.next(), "multiplier", line)?;
        if cols.next().is_some() {
            return Err(Error::Parse {
                line,
                message: "expected exactly two columns".into(),
            });
        }
        values.push(value);
    }
    Schedule::new(values)
}

pub fn write_schedule_csv(path: &Path, schedule: &Schedule) -> Result<()> {
    fs::write(path, schedule_to_csv(schedule))?;
    Ok(())
}

pub fn read_schedule_csv(path: &Path) -> Result<Schedule> {
    schedule_from_csv(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Gradient-norm logs: CSV `step,norm[,kind]` or JSON-lines records
// ---------------------------------------------------------------------------

pub fn norm_log_to_csv(log: &GradientNormLog) -> String {
    let kind = kind_token(log.kind());
    let mut out = String::from("step,norm,kind\n");
    for (s, n) in log.steps().iter().zip(log.norms()) {
        let _ = writeln!(out, "{s},{n},{kind}");
    }
    out
}

fn kind_token(kind: NormKind) -> &'static str {
    match kind {
        NormKind::L2 => "l2",
        NormKind::L1 => "l1",
        NormKind::AdamWeighted => "adam_weighted",
    }
}

fn parse_kind(token: &str, line: usize) -> Result<NormKind> {
    match token {
        "l2" => Ok(NormKind::L2),
        "l1" => Ok(NormKind::L1),
        "adam_weighted" => Ok(NormKind::AdamWeighted),
        other => Err(Error::Parse {
            line,
            message: format!("unknown norm kind '{other}' (expected l2, l1, or adam_weighted)"),
        }),
    }
}

/// One JSON-lines norm record.
#[derive(Deserialize)]
struct NormRecord {
    step: u64,
    norm: f64,
}

/// Parse a norm log from text, auto-detecting the format: lines starting
/// with `{` are JSON records, anything else is the CSV layout. A caller-
/// supplied kind wins over whatever the file declares; files declaring no
/// kind default to plain Euclidean norms.
pub fn norm_log_from_str(text: &str, kind_override: Option<NormKind>) -> Result<GradientNormLog> {
    let first = text.trim_start().chars().next();
    if first == Some('{') {
        norm_log_from_jsonl(text, kind_override)
    } else {
        norm_log_from_csv(text, kind_override)
    }
}

fn norm_log_from_jsonl(text: &str, kind_override: Option<NormKind>) -> Result<GradientNormLog> {
    let mut steps = Vec::new();
    let mut norms = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record: NormRecord = serde_json::from_str(raw).map_err(|e| Error::Parse {
            line,
            message: format!("invalid norm record: {e}"),
        })?;
        check_norm(record.norm, line)?;
        steps.push(record.step);
        norms.push(record.norm);
    }
    GradientNormLog::new(steps, norms, kind_override.unwrap_or(NormKind::L2))
}

fn norm_log_from_csv(text: &str, kind_override: Option<NormKind>) -> Result<GradientNormLog> {
    let mut lines = text.lines().enumerate();
    let header_kind = match lines.next() {
        Some((_, h)) if h.trim() == "step,norm" => None,
        Some((_, h)) if h.trim() == "step,norm,kind" => Some(()),
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "expected header 'step,norm' or 'step,norm,kind'".into(),
            })
        }
    };
    let mut steps = Vec::new();
    let mut norms = Vec::new();
    let mut file_kind: Option<NormKind> = None;
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut cols = raw.split(',');
        steps.push(parse_step(cols.next(), line)?);
        let norm = parse_float(cols.next(), "norm", line)?;
        check_norm(norm, line)?;
        norms.push(norm);
        match (header_kind, cols.next()) {
            (Some(()), Some(token)) => {
                let kind = parse_kind(token.trim(), line)?;
                if let Some(prev) = file_kind {
                    if prev != kind {
                        return Err(Error::Parse {
                            line,
                            message: "conflicting norm kinds in one log".into(),
                        });
                    }
                }
                file_kind = Some(kind);
            }
            (Some(()), None) => {
                return Err(Error::Parse {
                    line,
                    message: "missing kind column".into(),
                })
            }
            (None, Some(_)) => {
                return Err(Error::Parse {
                    line,
                    message: "expected exactly two columns".into(),
                })
            }
            (None, None) => {}
        }
    }
    let kind = kind_override.or(file_kind).unwrap_or(NormKind::L2);
    GradientNormLog::new(steps, norms, kind)
}

pub fn write_norm_log_csv(path: &Path, log: &GradientNormLog) -> Result<()> {
    fs::write(path, norm_log_to_csv(log))?;
    Ok(())
}

pub fn read_norm_log(path: &Path, kind_override: Option<NormKind>) -> Result<GradientNormLog> {
    norm_log_from_str(&fs::read_to_string(path)?, kind_override)
}

fn check_norm(norm: f64, line: usize) -> Result<()> {
    if !norm.is_finite() || norm < 0.0 {
        return Err(Error::Parse {
            line,
            message: format!("norms must be finite and nonnegative, got {norm}"),
        });
    }
    Ok(())
}

fn parse_step(col: Option<&str>, line: usize) -> Result<u64> {
    let col = col.ok_or_else(|| Error::Parse {
        line,
        message: "missing step column".into(),
    })?;
    col.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid step '{}'", col.trim()),
    })
}

fn parse_float(col: Option<&str>, name: &str, line: usize) -> Result<f64> {
    let col = col.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {name} column"),
    })?;
    col.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {name} '{}'", col.trim()),
    })
}

// ---------------------------------------------------------------------------
// Run logs and results tables
// ---------------------------------------------------------------------------

/// One JSON object per line, in the order given.
pub fn run_reports_to_jsonl(reports: &[RunReport]) -> Result<String> {
    let mut out = String::new();
    for report in reports {
        let line = serde_json::to_string(report)
            .map_err(|e| Error::Domain(format!("cannot serialize run report: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_run_reports_jsonl(path: &Path, reports: &[RunReport]) -> Result<()> {
    fs::write(path, run_reports_to_jsonl(reports)?)?;
    Ok(())
}

/// Mean and standard error of the mean (sample standard deviation over
/// `sqrt(n)`; zero for a single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n > 0, "mean of an empty sample");
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Aggregated row of a simulate results table.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub schedule: String,
    pub seeds: usize,
    pub mean_final_loss: f64,
    pub stderr_final_loss: f64,
    pub mean_final_suboptimality: Option<f64>,
    pub stderr_final_suboptimality: Option<f64>,
    pub mean_error_rate: Option<f64>,
    pub stderr_error_rate: Option<f64>,
}

pub fn results_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(
        "schedule,seeds,mean_final_loss,stderr_final_loss,\
         mean_final_suboptimality,stderr_final_suboptimality,\
         mean_error_rate,stderr_error_rate\n",
    );
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.schedule,
            r.seeds,
            r.mean_final_loss,
            r.stderr_final_loss,
            cell(r.mean_final_suboptimality),
            cell(r.stderr_final_suboptimality),
            cell(r.mean_error_rate),
            cell(r.stderr_error_rate),
        );
    }
    out
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    fs::write(path, results_to_csv(rows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{make_schedule, ScheduleKind};

    #[test]
    fn schedule_csv_round_trips_bit_exactly() {
        let schedule = make_schedule(&ScheduleKind::Cosine, 37).unwrap();
        let text = schedule_to_csv(&schedule);
        let back = schedule_from_csv(&text).unwrap();
        assert_eq!(schedule.values().len(), back.values().len());
        for (a, b) in schedule.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // and the re-serialization is byte-identical
        assert_eq!(text, schedule_to_csv(&back));
    }

    #[test]
    fn schedule_csv_round_trips_awkward_values() {
        let schedule = Schedule::new(vec![1.0, 0.1 + 0.2, 1e-300, 0.3333333333333333]).unwrap();
        let back = schedule_from_csv(&schedule_to_csv(&schedule)).unwrap();
        for (a, b) in schedule.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn schedule_csv_reports_line_numbers() {
        let err = schedule_from_csv("bogus\n1,0.5\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = schedule_from_csv("step,multiplier\n1,0.5\n3,0.25\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = schedule_from_csv("step,multiplier\n1,abc\n").unwrap_err();
        assert!(err.to_string().contains("invalid multiplier"), "{err}");
    }

    #[test]
    fn norm_csv_round_trips_and_carries_kind() {
        let log =
            GradientNormLog::from_norms(vec![1.5, 0.5, 0.25], NormKind::AdamWeighted).unwrap();
        let text = norm_log_to_csv(&log);
        assert!(text.starts_with("step,norm,kind\n"));
        let back = norm_log_from_str(&text, None).unwrap();
        assert_eq!(back.kind(), NormKind::AdamWeighted);
        assert_eq!(back.norms(), log.norms());
        assert_eq!(back.steps(), log.steps());
    }

    #[test]
    fn two_column_norm_csv_defaults_to_l2() {
        let log = norm_log_from_str("step,norm\n1,2.0\n2,1.0\n", None).unwrap();
        assert_eq!(log.kind(), NormKind::L2);
        assert_eq!(log.norms(), &[2.0, 1.0]);
        let forced = norm_log_from_str("step,norm\n1,2.0\n", Some(NormKind::L1)).unwrap();
        assert_eq!(forced.kind(), NormKind::L1);
    }

    #[test]
    fn caller_kind_overrides_the_file_kind() {
        let text = "step,norm,kind\n1,2.0,l1\n";
        let log = norm_log_from_str(text, Some(NormKind::L2)).unwrap();
        assert_eq!(log.kind(), NormKind::L2);
    }

    #[test]
    fn jsonl_norm_records_parse() {
        let text = "{\"step\": 1, \"norm\": 2.0}\n\n{\"step\": 2, \"norm\": 0.5}\n";
        let log = norm_log_from_str(text, None).unwrap();
        assert_eq!(log.steps(), &[1, 2]);
        assert_eq!(log.norms(), &[2.0, 0.5]);
        assert_eq!(log.kind(), NormKind::L2);
    }

    #[test]
    fn norm_parsing_rejects_bad_rows_with_line_numbers() {
        let err = norm_log_from_str("step,norm\n1,-2.0\n", None).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = norm_log_from_str("step,norm\n1,NaN\n", None).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = norm_log_from_str("{\"step\": 1}\n", None).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = norm_log_from_str("step,norm,kind\n1,1.0,l3\n", None).unwrap_err();
        assert!(err.to_string().contains("unknown norm kind"), "{err}");
        let err = norm_log_from_str("step,norm,kind\n1,1.0,l2\n2,1.0,l1\n", None).unwrap_err();
        assert!(err.to_string().contains("conflicting"), "{err}");
    }

    #[test]
    fn mean_stderr_matches_hand_values() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        // sample variance 5/3, stderr sqrt(5/12)
        assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        let (m1, s1) = mean_stderr(&[7.0]);
        assert_eq!((m1, s1), (7.0, 0.0));
    }

    #[test]
    fn results_csv_leaves_unknown_cells_empty() {
        let rows = vec![ResultRow {
            schedule: "linear".into(),
            seeds: 5,
            mean_final_loss: 0.5,
            stderr_final_loss: 0.01,
            mean_final_suboptimality: None,
            stderr_final_suboptimality: None,
            mean_error_rate: Some(0.125),
            stderr_error_rate: Some(0.0),
        }];
        let text = results_to_csv(&rows);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "schedule,seeds,mean_final_loss,stderr_final_loss,\
             mean_final_suboptimality,stderr_final_suboptimality,\
             mean_error_rate,stderr_error_rate"
        );
        assert_eq!(lines.next().unwrap(), "linear,5,0.5,0.01,,,0.125,0");
    }
}
