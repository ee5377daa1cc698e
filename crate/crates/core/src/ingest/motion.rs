//! Motion-capture CSV: one row per sample, columns `<marker>_x`, `<marker>_y`, `<marker>_z` in mm.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array3;

use super::{FlaggedSpan, IngestError, MotionTrace};

/// Longest dropout (in samples) that is bridged by linear interpolation without a flag.
pub const MAX_INTERPOLATED_GAP: usize = 10;

const AXES: [&str; 3] = ["x", "y", "z"];

fn declared_rate(text: &str) -> Option<f64> {
    text.lines()
        .map(str::trim)
        .take_while(|l| l.is_empty() || l.starts_with('#'))
        .filter_map(|l| {
            let body = l.trim_start_matches('#').trim();
            let (key, value) = body.split_once(['=', ':'])?;
            key.trim()
                .eq_ignore_ascii_case("rate")
                .then(|| value.trim().trim_end_matches("Hz").trim().parse().ok())
                .flatten()
        })
        .next()
}

/// Parses motion CSV text. `rate` overrides any `# rate = <Hz>` comment.
pub fn parse_motion_csv(text: &str, path: &str, rate: Option<f64>) -> Result<MotionTrace, IngestError> {
    let rate = rate
        .or_else(|| declared_rate(text))
        .filter(|r| *r > 0.0 && r.is_finite())
        .ok_or_else(|| IngestError::MissingRate { path: path.to_string() })?;

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Parse {
            path: path.to_string(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();

    // Marker order follows the first appearance of `<marker>_x`.
    let mut marker_names: Vec<String> = Vec::new();
    for h in headers.iter() {
        if let Some(stem) = h.strip_suffix("_x").or_else(|| h.strip_suffix("_X")) {
            if !stem.is_empty() && !marker_names.iter().any(|m| m == stem) {
                marker_names.push(stem.to_string());
            }
        }
    }
    if marker_names.is_empty() {
        return Err(IngestError::MissingColumn {
            path: path.to_string(),
            column: "<marker>_x".into(),
        });
    }
    let mut columns = Vec::with_capacity(marker_names.len());
    for m in &marker_names {
        let mut idx = [0usize; 3];
        for (a, axis) in AXES.iter().enumerate() {
            let want = format!("{m}_{axis}");
            idx[a] = headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(&want))
                .ok_or_else(|| IngestError::MissingColumn {
                    path: path.to_string(),
                    column: want.clone(),
                })?;
        }
        columns.push(idx);
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::Parse {
            path: path.to_string(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut row = Vec::with_capacity(columns.len() * 3);
        for idx in &columns {
            for &c in idx {
                let cell = record.get(c).unwrap_or("");
                let v = if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                    f64::NAN
                } else {
                    cell.parse::<f64>().map_err(|_| IngestError::Parse {
                        path: path.to_string(),
                        line,
                        message: format!("non-numeric cell `{cell}` in column `{}`", &headers[c]),
                    })?
                };
                row.push(v);
            }
        }
        rows.push(row);
    }

    let n = rows.len();
    let mut positions = Array3::<f64>::zeros((marker_names.len(), n, 3));
    for (s, row) in rows.iter().enumerate() {
        for m in 0..marker_names.len() {
            for a in 0..3 {
                positions[[m, s, a]] = row[m * 3 + a];
            }
        }
    }
    let flagged = fill_gaps(&mut positions);
    Ok(MotionTrace {
        positions,
        rate,
        marker_names,
        flagged,
    })
}

pub fn read_motion_csv(path: impl AsRef<Path>, rate: Option<f64>) -> Result<MotionTrace, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    parse_motion_csv(&text, &path.display().to_string(), rate)
}

/// Fills every missing sample (any axis non-finite) in place and returns
/// the spans that could not be bridged within [`MAX_INTERPOLATED_GAP`].
///
/// Interior gaps are interpolated linearly; gaps touching either end hold
/// the nearest observed value. A marker with no observation becomes zeros.
fn fill_gaps(positions: &mut Array3<f64>) -> Vec<FlaggedSpan> {
    let (n_markers, n, _) = positions.dim();
    let mut flagged = Vec::new();
    for m in 0..n_markers {
        let missing: Vec<bool> = (0..n)
            .map(|s| (0..3).any(|a| !positions[[m, s, a]].is_finite()))
            .collect();
        let mut s = 0;
        while s < n {
            if !missing[s] {
                s += 1;
                continue;
            }
            let start = s;
            while s < n && missing[s] {
                s += 1;
            }
            let end = s;
            let before = start.checked_sub(1);
            let after = (end < n).then_some(end);
            for a in 0..3 {
                for t in start..end {
                    positions[[m, t, a]] = match (before, after) {
                        (Some(b), Some(e)) => {
                            let frac = (t - b) as f64 / (e - b) as f64;
                            positions[[m, b, a]] + frac * (positions[[m, e, a]] - positions[[m, b, a]])
                        }
                        (Some(b), None) => positions[[m, b, a]],
                        (None, Some(e)) => positions[[m, e, a]],
                        (None, None) => 0.0,
                    };
                }
            }
            let bridged = before.is_some() && after.is_some() && end - start <= MAX_INTERPOLATED_GAP;
            if !bridged {
                flagged.push(FlaggedSpan { marker: m, start, end });
            }
        }
    }
    flagged
}

/// Writes a trace in the format read by [`read_motion_csv`]; values round-trip exactly.
pub fn write_motion_csv(trace: &MotionTrace, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    let mut out = String::new();
    let _ = writeln!(out, "# rate = {}", trace.rate);
    let header: Vec<String> = trace
        .marker_names
        .iter()
        .flat_map(|m| AXES.iter().map(move |a| format!("{m}_{a}")))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    let (n_markers, n, _) = trace.positions.dim();
    for s in 0..n {
        for m in 0..n_markers {
            for a in 0..3 {
                if m + a > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", trace.positions[[m, s, a]]);
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| IngestError::io(path, e))
}
