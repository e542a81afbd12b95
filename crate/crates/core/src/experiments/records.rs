//! Persisted per-trial records and their CSV / JSON-lines encodings.
//!
//! CSV columns are fixed by [`trial_header`] and [`tail_header`]; failed rows
//! carry only the identifying columns and the failure text, with every value
//! cell empty. JSON lines hold the same records with `null` in place of empty
//! cells.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::config::RecordFormat;
use crate::error::{Error, Result};

/// One `(trial, radius)` row of the `verify` record stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    /// Grid radius.
    pub r: f64,
    /// `kind: message` of the error that made this row unusable.
    pub failure: Option<String>,
    pub values: Option<TrialValues>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialValues {
    /// Radius actually evaluated; differs from `r` only after a jitter retry.
    pub r_eval: f64,
    pub n_zero: u64,
    #[serde(rename = "N_zero")]
    pub counting_n_zero: f64,
    pub log_c0: f64,
    pub log_sigma_f: f64,
    pub log_sigma_omega: f64,
    #[serde(rename = "log_M_f")]
    pub log_m_f: f64,
    /// Empty where rounding of the base coefficients hides `|f| ≈ 1`.
    #[serde(rename = "T_f")]
    pub t_f: Option<f64>,
    #[serde(rename = "T_omega")]
    pub t_omega: f64,
    #[serde(rename = "X_r")]
    pub x_r: f64,
    /// `r d/dr log σ(r, f)`.
    pub s_r: f64,
    /// `|log σ(r,f) − N(r,0)|`.
    pub deviation: f64,
    /// `|log σ(r,f) − N(r,0) − log|c(0)||`.
    pub jensen_deviation: f64,
    pub band: f64,
    pub band_a: f64,
    pub violated: bool,
    pub threshold_radius_estimate: Option<f64>,
    pub lem3_f_slack: Option<f64>,
    pub lem3_omega_slack: Option<f64>,
    #[serde(rename = "sigma_le_M_slack")]
    pub sigma_le_m_slack: f64,
    pub maxlem_slack: Option<f64>,
    pub lem6_slack: Option<f64>,
    pub cor1_f_slack: Option<f64>,
    pub cor1_omega_slack: Option<f64>,
    pub newcor3_slack: Option<f64>,
    pub targets: Vec<TargetValues>,
}

/// Columns for one general value `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetValues {
    pub a_re: f64,
    pub a_im: f64,
    pub n_a: u64,
    #[serde(rename = "N_a")]
    pub counting_n_a: f64,
    pub deviation_a: f64,
    pub violated_a: bool,
    pub threshold_radius_a: Option<f64>,
}

/// One `(trial, radius)` row of the `tails` record stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRecord {
    pub trial_index: u64,
    pub r: f64,
    pub failure: Option<String>,
    pub values: Option<TailValues>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailValues {
    pub log_sigma_f: f64,
    /// `|log|f̂_ω(re^{iθ})||` at the configured angle.
    pub pointwise_abs_log: f64,
    #[serde(rename = "X_r")]
    pub x_r: Option<f64>,
    /// `(1/2π)∫|log|f̂_ω||^p dθ` for each configured `p`.
    pub moments: Vec<f64>,
}

const TRIAL_FIXED: [&str; 29] = [
    "trial_index",
    "r",
    "failed",
    "failure",
    "r_eval",
    "n_zero",
    "N_zero",
    "log_c0",
    "log_sigma_f",
    "log_sigma_omega",
    "log_M_f",
    "T_f",
    "T_omega",
    "X_r",
    "s_r",
    "deviation",
    "jensen_deviation",
    "band",
    "band_a",
    "violated",
    "threshold_radius_estimate",
    "lem3_f_slack",
    "lem3_omega_slack",
    "sigma_le_M_slack",
    "maxlem_slack",
    "lem6_slack",
    "cor1_f_slack",
    "cor1_omega_slack",
    "newcor3_slack",
];

const TARGET_COLUMNS: [&str; 7] = ["a_re", "a_im", "n_a", "N_a", "deviation_a", "violated_a", "threshold_radius_a"];

/// Header of the `verify` CSV: the fixed columns, then one block of
/// [`TARGET_COLUMNS`] per target value, suffixed by its position.
pub fn trial_header(n_targets: usize) -> Vec<String> {
    let mut h: Vec<String> = TRIAL_FIXED.iter().map(|s| s.to_string()).collect();
    for k in 0..n_targets {
        h.extend(TARGET_COLUMNS.iter().map(|c| format!("{c}_{k}")));
    }
    h
}

/// Header of the `tails` CSV; moment columns are named by their order `p`.
pub fn tail_header(p_grid: &[f64]) -> Vec<String> {
    let mut h: Vec<String> = ["trial_index", "r", "failed", "failure", "log_sigma_f", "pointwise_abs_log", "X_r"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(p_grid.iter().map(|p| format!("abs_log_moment_p{}", fmt_f64(*p))));
    h
}

/// Shortest round-trip decimal, switching to exponent form for extreme magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn trial_row(rec: &TrialRecord, n_targets: usize) -> Vec<String> {
    let mut row = vec![
        rec.trial_index.to_string(),
        fmt_f64(rec.r),
        rec.failure.is_some().to_string(),
        rec.failure.clone().unwrap_or_default(),
    ];
    match &rec.values {
        None => row.resize(trial_header(n_targets).len(), String::new()),
        Some(v) => {
            row.extend([
                fmt_f64(v.r_eval),
                v.n_zero.to_string(),
                fmt_f64(v.counting_n_zero),
                fmt_f64(v.log_c0),
                fmt_f64(v.log_sigma_f),
                fmt_f64(v.log_sigma_omega),
                fmt_f64(v.log_m_f),
                opt(v.t_f),
                fmt_f64(v.t_omega),
                fmt_f64(v.x_r),
                fmt_f64(v.s_r),
                fmt_f64(v.deviation),
                fmt_f64(v.jensen_deviation),
                fmt_f64(v.band),
                fmt_f64(v.band_a),
                v.violated.to_string(),
                opt(v.threshold_radius_estimate),
                opt(v.lem3_f_slack),
                opt(v.lem3_omega_slack),
                fmt_f64(v.sigma_le_m_slack),
                opt(v.maxlem_slack),
                opt(v.lem6_slack),
                opt(v.cor1_f_slack),
                opt(v.cor1_omega_slack),
                opt(v.newcor3_slack),
            ]);
            for t in &v.targets {
                row.extend([
                    fmt_f64(t.a_re),
                    fmt_f64(t.a_im),
                    t.n_a.to_string(),
                    fmt_f64(t.counting_n_a),
                    fmt_f64(t.deviation_a),
                    t.violated_a.to_string(),
                    opt(t.threshold_radius_a),
                ]);
            }
        }
    }
    row
}

fn tail_row(rec: &TailRecord, p_count: usize) -> Vec<String> {
    let mut row = vec![
        rec.trial_index.to_string(),
        fmt_f64(rec.r),
        rec.failure.is_some().to_string(),
        rec.failure.clone().unwrap_or_default(),
    ];
    match &rec.values {
        None => row.resize(7 + p_count, String::new()),
        Some(v) => {
            row.extend([fmt_f64(v.log_sigma_f), fmt_f64(v.pointwise_abs_log), opt(v.x_r)]);
            if v.moments.is_empty() {
                row.resize(7 + p_count, String::new());
            } else {
                row.extend(v.moments.iter().map(|m| fmt_f64(*m)));
            }
        }
    }
    row
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_csv(out: impl Write, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_jsonl<T: Serialize>(mut out: impl Write, records: &[T]) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut out, rec).map_err(json_err)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(input: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(json_err)?);
        }
    }
    Ok(out)
}

pub fn write_trial_records(out: impl Write, records: &[TrialRecord], n_targets: usize, format: RecordFormat) -> Result<()> {
    match format {
        RecordFormat::Csv => write_csv(out, &trial_header(n_targets), records.iter().map(|r| trial_row(r, n_targets))),
        RecordFormat::Jsonl => write_jsonl(out, records),
    }
}

pub fn write_tail_records(out: impl Write, records: &[TailRecord], p_grid: &[f64], format: RecordFormat) -> Result<()> {
    match format {
        RecordFormat::Csv => write_csv(out, &tail_header(p_grid), records.iter().map(|r| tail_row(r, p_grid.len()))),
        RecordFormat::Jsonl => write_jsonl(out, records),
    }
}

/// Cell access by column name for one CSV row.
struct Row<'a> {
    index: &'a HashMap<String, usize>,
    cells: &'a csv::StringRecord,
}

impl Row<'_> {
    fn text(&self, name: &str) -> Result<&str> {
        let i = self.index.get(name).ok_or_else(|| Error::Io(format!("missing column {name}")))?;
        Ok(self.cells.get(*i).unwrap_or(""))
    }

    fn f64(&self, name: &str) -> Result<f64> {
        let t = self.text(name)?;
        t.parse().map_err(|_| Error::Io(format!("column {name}: bad number '{t}'")))
    }

    fn opt_f64(&self, name: &str) -> Result<Option<f64>> {
        if self.text(name)?.is_empty() {
            Ok(None)
        } else {
            self.f64(name).map(Some)
        }
    }

    fn u64(&self, name: &str) -> Result<u64> {
        let t = self.text(name)?;
        t.parse().map_err(|_| Error::Io(format!("column {name}: bad integer '{t}'")))
    }

    fn bool(&self, name: &str) -> Result<bool> {
        match self.text(name)? {
            "true" => Ok(true),
            "false" => Ok(false),
            t => Err(Error::Io(format!("column {name}: bad boolean '{t}'"))),
        }
    }

    fn failure(&self) -> Result<Option<String>> {
        Ok(if self.bool("failed")? { Some(self.text("failure")?.to_string()) } else { None })
    }
}

fn csv_rows(input: impl std::io::Read) -> Result<(HashMap<String, usize>, Vec<csv::StringRecord>)> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let index = header.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_err)?;
    Ok((index, rows))
}

pub fn read_trial_records(input: impl BufRead, format: RecordFormat) -> Result<Vec<TrialRecord>> {
    if format == RecordFormat::Jsonl {
        return read_jsonl(input);
    }
    let (index, rows) = csv_rows(input)?;
    let n_targets = (0..).take_while(|k| index.contains_key(&format!("a_re_{k}"))).count();
    rows.iter()
        .map(|cells| {
            let row = Row { index: &index, cells };
            let failure = row.failure()?;
            let values = if failure.is_some() {
                None
            } else {
                let targets = (0..n_targets)
                    .map(|k| {
                        Ok(TargetValues {
                            a_re: row.f64(&format!("a_re_{k}"))?,
                            a_im: row.f64(&format!("a_im_{k}"))?,
                            n_a: row.u64(&format!("n_a_{k}"))?,
                            counting_n_a: row.f64(&format!("N_a_{k}"))?,
                            deviation_a: row.f64(&format!("deviation_a_{k}"))?,
                            violated_a: row.bool(&format!("violated_a_{k}"))?,
                            threshold_radius_a: row.opt_f64(&format!("threshold_radius_a_{k}"))?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(TrialValues {
                    r_eval: row.f64("r_eval")?,
                    n_zero: row.u64("n_zero")?,
                    counting_n_zero: row.f64("N_zero")?,
                    log_c0: row.f64("log_c0")?,
                    log_sigma_f: row.f64("log_sigma_f")?,
                    log_sigma_omega: row.f64("log_sigma_omega")?,
                    log_m_f: row.f64("log_M_f")?,
                    t_f: row.opt_f64("T_f")?,
                    t_omega: row.f64("T_omega")?,
                    x_r: row.f64("X_r")?,
                    s_r: row.f64("s_r")?,
                    deviation: row.f64("deviation")?,
                    jensen_deviation: row.f64("jensen_deviation")?,
                    band: row.f64("band")?,
                    band_a: row.f64("band_a")?,
                    violated: row.bool("violated")?,
                    threshold_radius_estimate: row.opt_f64("threshold_radius_estimate")?,
                    lem3_f_slack: row.opt_f64("lem3_f_slack")?,
                    lem3_omega_slack: row.opt_f64("lem3_omega_slack")?,
                    sigma_le_m_slack: row.f64("sigma_le_M_slack")?,
                    maxlem_slack: row.opt_f64("maxlem_slack")?,
                    lem6_slack: row.opt_f64("lem6_slack")?,
                    cor1_f_slack: row.opt_f64("cor1_f_slack")?,
                    cor1_omega_slack: row.opt_f64("cor1_omega_slack")?,
                    newcor3_slack: row.opt_f64("newcor3_slack")?,
                    targets,
                })
            };
            Ok(TrialRecord { trial_index: row.u64("trial_index")?, r: row.f64("r")?, failure, values })
        })
        .collect()
}

pub fn read_tail_records(input: impl BufRead, format: RecordFormat) -> Result<Vec<TailRecord>> {
    if format == RecordFormat::Jsonl {
        return read_jsonl(input);
    }
    let (index, rows) = csv_rows(input)?;
    let mut moment_cols: Vec<(usize, String)> = index
        .iter()
        .filter(|(name, _)| name.starts_with("abs_log_moment_p"))
        .map(|(name, &i)| (i, name.clone()))
        .collect();
    moment_cols.sort();
    rows.iter()
        .map(|cells| {
            let row = Row { index: &index, cells };
            let failure = row.failure()?;
            let values = if failure.is_some() {
                None
            } else {
                let mut moments = Vec::new();
                for (_, name) in &moment_cols {
                    if let Some(m) = row.opt_f64(name)? {
                        moments.push(m);
                    }
                }
                Some(TailValues {
                    log_sigma_f: row.f64("log_sigma_f")?,
                    pointwise_abs_log: row.f64("pointwise_abs_log")?,
                    x_r: row.opt_f64("X_r")?,
                    moments,
                })
            };
            Ok(TailRecord { trial_index: row.u64("trial_index")?, r: row.f64("r")?, failure, values })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_records() -> Vec<TrialRecord> {
        let values = TrialValues {
            r_eval: 5.0,
            n_zero: 4,
            counting_n_zero: 3.25,
            log_c0: -0.125,
            log_sigma_f: 3.9,
            log_sigma_omega: 4.1,
            log_m_f: 5.0,
            t_f: Some(1.59),
            t_omega: 3.7,
            x_r: 0.61,
            s_r: 4.5,
            deviation: 0.65,
            jensen_deviation: 0.775,
            band: 0.91,
            band_a: 2.6,
            violated: false,
            threshold_radius_estimate: Some(5.0),
            lem3_f_slack: Some(2.6),
            lem3_omega_slack: Some(0.75),
            sigma_le_m_slack: 1.1,
            maxlem_slack: Some(-0.26),
            lem6_slack: Some(3.2),
            cor1_f_slack: None,
            cor1_omega_slack: Some(1e-300),
            newcor3_slack: Some(0.1 + 0.2),
            targets: vec![TargetValues {
                a_re: 1.0,
                a_im: -0.5,
                n_a: 4,
                counting_n_a: 3.5,
                deviation_a: 0.4,
                violated_a: false,
                threshold_radius_a: None,
            }],
        };
        vec![
            TrialRecord { trial_index: 0, r: 5.0, failure: None, values: Some(values) },
            TrialRecord { trial_index: 1, r: 5.0, failure: Some("RootFindingFailure: residual, \"quoted\"".into()), values: None },
        ]
    }

    #[test]
    fn trial_records_round_trip() {
        let recs = sample_records();
        for format in [RecordFormat::Csv, RecordFormat::Jsonl] {
            let mut buf = Vec::new();
            write_trial_records(&mut buf, &recs, 1, format).unwrap();
            let back = read_trial_records(buf.as_slice(), format).unwrap();
            assert_eq!(back, recs, "{format}");
        }
    }

    #[test]
    fn header_is_fixed() {
        let h = trial_header(2);
        assert_eq!(&h[..4], &["trial_index", "r", "failed", "failure"]);
        assert_eq!(h.len(), 29 + 14);
        assert_eq!(h.last().unwrap(), "threshold_radius_a_1");
    }

    #[test]
    fn tail_records_round_trip() {
        let recs = vec![
            TailRecord {
                trial_index: 3,
                r: 10.0,
                failure: None,
                values: Some(TailValues { log_sigma_f: 9.8, pointwise_abs_log: 0.3, x_r: Some(0.6), moments: vec![0.6, 0.5] }),
            },
            TailRecord { trial_index: 4, r: 10.0, failure: Some("QuadratureDivergence: x".into()), values: None },
        ];
        for format in [RecordFormat::Csv, RecordFormat::Jsonl] {
            let mut buf = Vec::new();
            write_tail_records(&mut buf, &recs, &[1.0, 2.5], format).unwrap();
            assert_eq!(read_tail_records(buf.as_slice(), format).unwrap(), recs);
        }
    }

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.0, 1.0, -2.5, 1e-300, 6.02e23, 0.1 + 0.2, 1e-5, 123456.789] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
