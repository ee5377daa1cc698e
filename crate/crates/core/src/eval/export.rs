//! CSV and SVG output of study reports.
//!
//! CSV columns, in order: `subject,condition,channel_set,train_sets,test_set,tpr,tnr,ba`.
//! `train_sets` joins set indices with `;`. Floats use the shortest
//! representation that parses back to the same value.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::study::{SplitResult, StudyReport};
use super::EvalError;
use crate::domain::ConditionId;

pub const CSV_HEADER: [&str; 8] = ["subject", "condition", "channel_set", "train_sets", "test_set", "tpr", "tnr", "ba"];

fn csv_err(e: csv::Error) -> EvalError {
    EvalError::Csv(e.to_string())
}

pub fn write_csv<W: Write>(results: &[SplitResult], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in results {
        let train = r.train_sets.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
        w.write_record([
            r.subject.clone(),
            r.condition.to_string(),
            r.channel_set.clone(),
            train,
            r.test_set.to_string(),
            r.tpr.to_string(),
            r.tnr.to_string(),
            r.ba.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| EvalError::Csv(e.to_string()))
}

pub fn csv_bytes(results: &[SplitResult]) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(results, &mut out).expect("writing to memory cannot fail");
    out
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SplitResult>, EvalError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(EvalError::Csv(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |field: &str| EvalError::Csv(format!("row {}: bad {field}", i + 2));
        let num = |j: usize, field: &str| rec[j].parse::<f64>().map_err(|_| bad(field));
        out.push(SplitResult {
            subject: rec[0].to_string(),
            condition: rec[1].parse::<ConditionId>().map_err(|_| bad("condition"))?,
            channel_set: rec[2].to_string(),
            train_sets: rec[3]
                .split(';')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| bad("train_sets")))
                .collect::<Result<_, _>>()?,
            test_set: rec[4].parse().map_err(|_| bad("test_set"))?,
            tpr: num(5, "tpr")?,
            tnr: num(6, "tnr")?,
            ba: num(7, "ba")?,
        });
    }
    Ok(out)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Box plot of the balanced accuracies of one cell on a 0..1 axis.
pub fn cell_svg(condition: ConditionId, channel_set: &str, values: &[f64]) -> String {
    const W: f64 = 240.0;
    const H: f64 = 320.0;
    const TOP: f64 = 30.0;
    const BOTTOM: f64 = 290.0;
    let y = |v: f64| BOTTOM - v.clamp(0.0, 1.0) * (BOTTOM - TOP);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-family="sans-serif" font-size="13">Condition {condition}, {channel_set}</text>"#, W / 2.0);
    let _ = writeln!(s, r#"<line x1="50" y1="{TOP}" x2="50" y2="{BOTTOM}" stroke="black"/>"#);
    for t in 0..=10 {
        let v = t as f64 / 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="45" y1="{0:.1}" x2="50" y2="{0:.1}" stroke="black"/><text x="42" y="{1:.1}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.1}</text>"#,
            y(v),
            y(v) + 3.5
        );
    }
    let _ = writeln!(s, r#"<line x1="50" y1="{0:.1}" x2="{1}" y2="{0:.1}" stroke="gray" stroke-dasharray="4 3"/>"#, y(0.5), W - 10.0);
    if !values.is_empty() {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let (q1, med, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
        let (lo, hi) = (v[0], v[v.len() - 1]);
        let cx = 145.0;
        let _ = writeln!(s, r#"<line x1="{cx}" y1="{:.1}" x2="{cx}" y2="{:.1}" stroke="black"/>"#, y(lo), y(hi));
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{:.1}" width="60" height="{:.1}" fill="lightsteelblue" stroke="black"/>"#,
            cx - 30.0,
            y(q3),
            (y(q1) - y(q3)).max(0.5)
        );
        let _ = writeln!(s, r#"<line x1="{}" y1="{:.1}" x2="{}" y2="{:.1}" stroke="black" stroke-width="2"/>"#, cx - 30.0, y(med), cx + 30.0, y(med));
        for (i, b) in values.iter().enumerate() {
            let dx = (i % 7) as f64 * 4.0 - 12.0;
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="black" fill-opacity="0.5"/>"#, cx + 45.0 + dx, y(*b));
        }
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">mean BA {m:.3} (n = {})</text>"#,
            W / 2.0,
            H - 8.0,
            v.len()
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `results.csv` and one `<condition>_<channel_set>.svg` per cell.
pub fn export_report(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let io = |path: &Path, e: std::io::Error| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    let csv_path = dir.join("results.csv");
    std::fs::write(&csv_path, csv_bytes(&report.results)).map_err(|e| io(&csv_path, e))?;
    written.push(csv_path);
    for cell in &report.cells {
        let values: Vec<f64> = report
            .results
            .iter()
            .filter(|r| r.condition == cell.condition && r.channel_set == cell.channel_set)
            .map(|r| r.ba)
            .collect();
        let path = dir.join(format!("{}_{}.svg", cell.condition, cell.channel_set));
        std::fs::write(&path, cell_svg(cell.condition, &cell.channel_set, &values)).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<SplitResult> {
        (0..24)
            .map(|i| SplitResult {
                subject: format!("sub{:02}", i / 3),
                condition: ConditionId::C,
                channel_set: "custom-32".into(),
                train_sets: vec![0, 1, 2].into_iter().filter(|&s| s != i % 3).collect(),
                test_set: i % 3,
                tpr: 0.1 + i as f64 / 37.0,
                tnr: 1.0 / (i as f64 + 3.0),
                ba: (0.1 + i as f64 / 37.0 + 1.0 / (i as f64 + 3.0)) / 2.0,
            })
            .collect()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rs = sample();
        let bytes = csv_bytes(&rs);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("subject,condition,channel_set,train_sets,test_set,tpr,tnr,ba\n"));
        assert_eq!(text.lines().count(), 25);
        assert!(text.lines().skip(1).all(|l| l.contains(",C,custom-32,")));
        let back = read_csv(bytes.as_slice()).unwrap();
        assert_eq!(back, rs);
        let order = vec!["custom-32".to_string()];
        assert_eq!(StudyReport::from_results(back, &order).cells, StudyReport::from_results(rs, &order).cells);
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(String::from_utf8(csv_bytes(&[])).unwrap(), "subject,condition,channel_set,train_sets,test_set,tpr,tnr,ba\n");
        assert!(read_csv(&b"subject,condition,channel_set,train_sets,test_set,tpr,tnr,ba\n"[..]).unwrap().is_empty());
    }

    #[test]
    fn export_writes_named_files() {
        let dir = tempfile::tempdir().unwrap();
        let report = StudyReport::from_results(sample(), &[]);
        let files = export_report(&report, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let svg = std::fs::read_to_string(dir.path().join("C_custom-32.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 24);
    }
}
