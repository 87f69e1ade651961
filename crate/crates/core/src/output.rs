//! CSV and JSON files for external plotting.
//!
//! CSV files carry latencies with 3 decimals and loads and ratios with 6 so
//! golden files stay stable. JSON keeps full precision.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown output format {s:?}"))),
        }
    }
}

pub const SUMMARY_HEADER: &str = "replicate,seed,scenario_digest,tau,phi_ms,psi";
pub const NODE_LOADS_HEADER: &str = "node_id,avg_load";
pub const SERIES_HEADER: &str = "t_ms,load";

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

/// One summary row per report in replicate order.
pub fn summary_csv(reports: &[MetricsReport]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for (i, r) in reports.iter().enumerate() {
        let phi = r.avg_latency_phi_ms.map(|p| format!("{p:.3}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{i},{},{},{:.6},{phi},{:.6}",
            r.seed, r.scenario_digest, r.avg_load_tau, r.drop_ratio_psi
        );
    }
    s
}

pub fn node_loads_csv(report: &MetricsReport) -> String {
    let mut s = String::from(NODE_LOADS_HEADER);
    s.push('\n');
    for (id, load) in &report.per_node_avg_load {
        let _ = writeln!(s, "{id},{load:.6}");
    }
    s
}

pub fn series_csv(report: &MetricsReport, node: crate::topology::NodeId) -> Option<String> {
    let series = report.load_series.get(&node)?;
    let mut s = String::from(SERIES_HEADER);
    s.push('\n');
    for (b, v) in series.values.iter().enumerate() {
        let _ = writeln!(s, "{},{v:.6}", b as f64 * series.bin_ms);
    }
    Some(s)
}

/// Writes `summary.{csv,json}` into `out_dir` plus per-report
/// `node_loads.csv` and `series_<node>.csv`. With several reports the
/// per-report files go to `replicate_<i>/`.
pub fn emit(reports: &[MetricsReport], format: Format, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    match format {
        Format::Csv => write(out_dir.join("summary.csv"), &summary_csv(reports))?,
        Format::Json => {
            let json = serde_json::to_string_pretty(reports).expect("reports serialize");
            write(out_dir.join("summary.json"), &json)?
        }
    }
    for (i, r) in reports.iter().enumerate() {
        let dir = if reports.len() == 1 {
            out_dir.to_path_buf()
        } else {
            let d = out_dir.join(format!("replicate_{i}"));
            fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
            d
        };
        write(dir.join("node_loads.csv"), &node_loads_csv(r))?;
        for &node in r.load_series.keys() {
            let csv = series_csv(r, node).expect("series exists");
            write(dir.join(format!("series_{node}.csv")), &csv)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::engine::Strategy;
    use crate::metrics::{JourneySummary, LoadSeries};
    use crate::topology::NodeId;

    fn report(seed: u64) -> MetricsReport {
        MetricsReport::assemble(
            Strategy::Passive,
            seed,
            "ab".into(),
            0.002,
            BTreeMap::from([(NodeId(1), 0.1 + 0.2), (NodeId(2), 1.0 / 3.0)]),
            BTreeMap::new(),
            BTreeMap::new(),
            BTreeMap::from([(
                NodeId(1),
                LoadSeries {
                    bin_ms: 1.0,
                    values: vec![0.7, 1e-17],
                },
            )]),
            JourneySummary::default(),
            &[],
        )
    }

    #[test]
    fn empty_input_gives_headers_only() {
        assert_eq!(summary_csv(&[]), format!("{SUMMARY_HEADER}\n"));
        let dir = tempfile::tempdir().unwrap();
        emit(&[], Format::Csv, dir.path()).unwrap();
        assert_eq!(
            fs::read_to_string(dir.path().join("summary.csv")).unwrap(),
            format!("{SUMMARY_HEADER}\n")
        );
    }

    #[test]
    fn csv_precision() {
        let r = report(3);
        assert_eq!(node_loads_csv(&r), "node_id,avg_load\n1,0.300000\n2,0.333333\n");
        let series = series_csv(&r, NodeId(1)).unwrap();
        assert_eq!(series, "t_ms,load\n0,0.700000\n1,0.000000\n");
        let mut r = r;
        r.avg_latency_phi_ms = Some(12.34567);
        r.avg_load_tau = 0.25;
        r.drop_ratio_psi = 1.0 / 7.0;
        assert_eq!(
            summary_csv(&[r]).lines().nth(1).unwrap(),
            "0,3,ab,0.250000,12.346,0.142857"
        );
    }

    #[test]
    fn json_round_trips() {
        let reports = vec![report(1), report(2)];
        let dir = tempfile::tempdir().unwrap();
        emit(&reports, Format::Json, dir.path()).unwrap();
        let back: Vec<MetricsReport> =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(back, reports);
        assert!(dir.path().join("replicate_1/series_1.csv").exists());
    }

    #[test]
    fn two_reports_two_rows() {
        let csv = summary_csv(&[report(1), report(2)]);
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].starts_with("0,1,ab,"));
        assert!(rows[1].starts_with("1,2,ab,"));
    }

    #[test]
    fn unwritable_dir_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("f");
        fs::write(&file, "").unwrap();
        let err = emit(&[report(1)], Format::Csv, &file).unwrap_err();
        assert!(err.to_string().contains("f"), "{err}");
    }
}
