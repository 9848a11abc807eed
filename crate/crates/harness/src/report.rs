//! CSV emission and text reports.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use lfa_core::metrics::EerCurve;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{SystemUtility, UtilityRecord};

fn csv_bytes<T: Serialize>(header: &[&str], rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Rows sorted by `k`: `k,eer,n_pos,n_neg`.
pub fn attack_csv(curve: &EerCurve) -> Vec<u8> {
    let mut points = curve.points.clone();
    points.sort_by_key(|p| p.k);
    csv_bytes(&["k", "eer", "n_pos", "n_neg"], points.iter().map(|p| (p.k, p.eer, p.n_pos, p.n_neg)))
}

/// Rows sorted by `k`: `k,eer,detector_kind`.
pub fn detect_csv(curve: &EerCurve, detector_kind: &str) -> Vec<u8> {
    let mut points = curve.points.clone();
    points.sort_by_key(|p| p.k);
    csv_bytes(&["k", "eer", "detector_kind"], points.iter().map(|p| (p.k, p.eer, detector_kind)))
}

/// `conv_id,gas,dtw_sim,mean_utt_len,naturalness`; naturalness is empty
/// when absent.
pub fn utility_csv(records: &[UtilityRecord]) -> Vec<u8> {
    csv_bytes(
        &["conv_id", "gas", "dtw_sim", "mean_utt_len", "naturalness"],
        records.iter().map(|r| (&r.conv_id, r.gas, r.dtw_sim, r.mean_utt_len, r.naturalness)),
    )
}

/// Plot-ready long format: `series,k,metric,value`.
pub fn curves_long<'a>(series: impl IntoIterator<Item = (&'a str, &'a EerCurve)>) -> Vec<u8> {
    let mut rows = Vec::new();
    for (name, curve) in series {
        let mut points = curve.points.clone();
        points.sort_by_key(|p| p.k);
        for p in points {
            rows.push((name, p.k, "eer", p.eer));
            rows.push((name, p.k, "n_pos", p.n_pos as f64));
            rows.push((name, p.k, "n_neg", p.n_neg as f64));
        }
    }
    csv_bytes(&["series", "k", "metric", "value"], rows)
}

/// One line of a results record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ResultRecord {
    Utility(SystemUtility),
    Naturalness { condition: String, utmos: f64 },
}

pub fn parse_records<R: Read>(reader: R, name: &str) -> Result<Vec<ResultRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { path: name.to_string(), line: i + 1, message: e.to_string() })?;
        out.push(record);
    }
    Ok(out)
}

/// Utility table in record order, followed by the naturalness summary when
/// both an anonymized and an original condition are present.
pub fn render_table(records: &[ResultRecord]) -> String {
    let systems: Vec<&SystemUtility> = records
        .iter()
        .filter_map(|r| match r {
            ResultRecord::Utility(u) => Some(u),
            _ => None,
        })
        .collect();
    let width = systems.iter().map(|s| s.system.chars().count()).chain(["LLM paraphraser".len()]).max().unwrap_or(0);
    let mut out = String::new();
    if !systems.is_empty() {
        let _ = writeln!(out, "{:<width$}  {:>5}  {:>7}  {:>14}", "LLM paraphraser", "GAS", "DTW-Sim", "Mean utt. len.");
        for s in systems {
            let _ = writeln!(out, "{:<width$}  {:>5.3}  {:>7.3}  {:>14.2}", s.system, s.gas, s.dtw_sim, s.mean_utt_len);
        }
    }
    let utmos = |cond: &str| {
        records.iter().find_map(|r| match r {
            ResultRecord::Naturalness { condition, utmos } if condition == cond => Some(*utmos),
            _ => None,
        })
    };
    if let (Some(a), Some(o)) = (utmos("anonymized"), utmos("original")) {
        let _ = writeln!(out, "UTMOS: {a:.2} anonymized vs {o:.2} original");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use lfa_core::metrics::CurvePoint;

    fn curve() -> EerCurve {
        EerCurve {
            points: vec![
                CurvePoint { k: 4, eer: 0.25, n_pos: 2, n_neg: 3 },
                CurvePoint { k: 1, eer: 0.5, n_pos: 2, n_neg: 3 },
            ],
        }
    }

    #[test]
    fn attack_csv_is_sorted_by_k() {
        let s = String::from_utf8(attack_csv(&curve())).unwrap();
        assert_eq!(s, "k,eer,n_pos,n_neg\n1,0.5,2,3\n4,0.25,2,3\n");
    }

    #[test]
    fn detect_and_long_formats() {
        let s = String::from_utf8(detect_csv(&curve(), "text")).unwrap();
        assert_eq!(s, "k,eer,detector_kind\n1,0.5,text\n4,0.25,text\n");
        let c = curve();
        let long = String::from_utf8(curves_long([("content", &c)])).unwrap();
        assert_eq!(long.lines().count(), 7);
        assert!(long.contains("content,1,eer,0.5"));
    }

    #[test]
    fn utility_csv_leaves_missing_naturalness_empty() {
        let r = UtilityRecord { conv_id: "c1".into(), gas: 1.0, dtw_sim: 1.0, mean_utt_len: 3.5, naturalness: None };
        let s = String::from_utf8(utility_csv(&[r])).unwrap();
        assert_eq!(s, "conv_id,gas,dtw_sim,mean_utt_len,naturalness\nc1,1.0,1.0,3.5,\n");
    }

    #[test]
    fn bad_record_reports_line() {
        let e = parse_records("{\"record\":\"naturalness\",\"condition\":\"x\",\"utmos\":1}\nnope\n".as_bytes(), "r")
            .unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }
}
