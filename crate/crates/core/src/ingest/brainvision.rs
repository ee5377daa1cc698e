//! BrainVision triplets: `.vhdr` header, `.vmrk` markers, `.eeg` binary.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::IngestError;
use crate::domain::{Marker, RawRecording};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryFormat {
    Int16,
    Float32,
}

impl BinaryFormat {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "INT_16" => Some(BinaryFormat::Int16),
            "IEEE_FLOAT_32" => Some(BinaryFormat::Float32),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            BinaryFormat::Int16 => "INT_16",
            BinaryFormat::Float32 => "IEEE_FLOAT_32",
        }
    }

    fn width(self) -> usize {
        match self {
            BinaryFormat::Int16 => 2,
            BinaryFormat::Float32 => 4,
        }
    }
}

/// `[Section]` → `key` → `(value, line number)`.
type Ini = HashMap<String, HashMap<String, (String, usize)>>;

fn parse_ini(text: &str, path: &str) -> Result<Ini, IngestError> {
    let mut out: Ini = HashMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if line.starts_with("Brain Vision") || line.starts_with("BrainVision") {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| IngestError::Parse {
                path: path.to_string(),
                line: line_no,
                message: format!("unterminated section header `{line}`"),
            })?;
            section = name.trim().to_string();
            continue;
        }
        // Free-text sections (e.g. [Comment]) carry no keys.
        if section.eq_ignore_ascii_case("Comment") {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| IngestError::Parse {
            path: path.to_string(),
            line: line_no,
            message: format!("expected `key=value`, found `{line}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(IngestError::Parse {
                path: path.to_string(),
                line: line_no,
                message: "empty key".into(),
            });
        }
        out.entry(section.clone())
            .or_default()
            .insert(key.to_string(), (value.trim().to_string(), line_no));
    }
    Ok(out)
}

fn required<'a>(
    ini: &'a Ini,
    section: &str,
    key: &str,
    path: &str,
) -> Result<&'a (String, usize), IngestError> {
    ini.get(section)
        .and_then(|s| s.get(key))
        .ok_or_else(|| IngestError::Parse {
            path: path.to_string(),
            line: 0,
            message: format!("missing key `{key}` in [{section}]"),
        })
}

fn parse_num<T: std::str::FromStr>(value: &str, path: &str, line: usize, what: &str) -> Result<T, IngestError> {
    value.trim().parse().map_err(|_| IngestError::Parse {
        path: path.to_string(),
        line,
        message: format!("invalid {what} `{value}`"),
    })
}

fn unit_scale(unit: &str) -> Option<f64> {
    match unit.trim() {
        "" | "µV" | "μV" | "uV" => Some(1.0),
        "nV" => Some(1e-3),
        "mV" => Some(1e3),
        "V" => Some(1e6),
        _ => None,
    }
}

struct ChannelInfo {
    name: String,
    scale: f64,
}

fn parse_channel(value: &str, path: &str, line: usize) -> Result<ChannelInfo, IngestError> {
    let fields: Vec<String> = value.split(',').map(|f| f.replace("\\1", ",")).collect();
    let name = fields[0].trim().to_string();
    if name.is_empty() {
        return Err(IngestError::Parse {
            path: path.to_string(),
            line,
            message: "empty channel name".into(),
        });
    }
    let resolution = match fields.get(2).map(|s| s.trim()) {
        None | Some("") => 1.0,
        Some(r) => parse_num::<f64>(r, path, line, "resolution")?,
    };
    let unit = fields.get(3).map(String::as_str).unwrap_or("");
    let scale = unit_scale(unit).ok_or_else(|| IngestError::Parse {
        path: path.to_string(),
        line,
        message: format!("unknown unit `{}`", unit.trim()),
    })?;
    Ok(ChannelInfo {
        name,
        scale: resolution * scale,
    })
}

fn read_text(path: &Path) -> Result<String, IngestError> {
    let bytes = fs::read(path).map_err(|e| IngestError::io(path, e))?;
    // Older exports use Latin-1 for the micro sign.
    Ok(match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => e.into_bytes().iter().map(|&b| b as char).collect(),
    })
}

fn parse_markers(text: &str, path: &str, samples: usize) -> Result<Vec<Marker>, IngestError> {
    let ini = parse_ini(text, path)?;
    let Some(section) = ini.get("Marker Infos") else {
        return Ok(Vec::new());
    };
    let mut entries: Vec<(usize, &String, usize)> = Vec::new();
    for (key, (value, line)) in section {
        let n = key
            .strip_prefix("Mk")
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| IngestError::Parse {
                path: path.to_string(),
                line: *line,
                message: format!("unexpected key `{key}` in [Marker Infos]"),
            })?;
        entries.push((n, value, *line));
    }
    entries.sort_by_key(|e| e.0);
    let mut markers = Vec::with_capacity(entries.len());
    for (_, value, line) in entries {
        let fields: Vec<&str> = value.split(',').collect();
        if fields.len() < 3 {
            return Err(IngestError::Parse {
                path: path.to_string(),
                line,
                message: format!("marker needs `<type>,<description>,<position>,...`, found `{value}`"),
            });
        }
        let position: usize = parse_num(fields[2], path, line, "marker position")?;
        if position >= samples {
            return Err(IngestError::MarkerOutOfRange {
                path: path.to_string(),
                line,
                position,
                samples,
            });
        }
        markers.push(Marker {
            sample: position,
            code: fields[1].replace("\\1", ","),
            kind: fields[0].trim().to_string(),
        });
    }
    Ok(markers)
}

/// Reads a multiplexed BrainVision recording, scaled to microvolts.
pub fn read_brainvision(header_path: impl AsRef<Path>) -> Result<RawRecording, IngestError> {
    let header_path = header_path.as_ref();
    let hp = header_path.display().to_string();
    let ini = parse_ini(&read_text(header_path)?, &hp)?;
    let dir = header_path.parent().unwrap_or(Path::new("."));

    let (n_chan, line) = required(&ini, "Common Infos", "NumberOfChannels", &hp)?;
    let n_chan: usize = parse_num(n_chan, &hp, *line, "channel count")?;
    let (interval, line) = required(&ini, "Common Infos", "SamplingInterval", &hp)?;
    let interval: f64 = parse_num(interval, &hp, *line, "sampling interval")?;
    if !(interval > 0.0) {
        return Err(IngestError::Parse {
            path: hp,
            line: *line,
            message: "sampling interval must be positive".into(),
        });
    }
    let rate = 1e6 / interval;
    if let Some((orient, _)) = ini.get("Common Infos").and_then(|s| s.get("DataOrientation")) {
        if !orient.eq_ignore_ascii_case("MULTIPLEXED") {
            return Err(IngestError::UnsupportedFormat {
                path: hp,
                format: format!("orientation {orient}"),
            });
        }
    }
    let format_str = ini
        .get("Binary Infos")
        .and_then(|s| s.get("BinaryFormat"))
        .map(|(v, _)| v.as_str())
        .unwrap_or("INT_16");
    let format = BinaryFormat::parse(format_str).ok_or_else(|| IngestError::UnsupportedFormat {
        path: hp.clone(),
        format: format_str.to_string(),
    })?;

    let mut channels = Vec::with_capacity(n_chan);
    for i in 1..=n_chan {
        let (value, line) = required(&ini, "Channel Infos", &format!("Ch{i}"), &hp)?;
        channels.push(parse_channel(value, &hp, *line)?);
    }

    let (data_file, _) = required(&ini, "Common Infos", "DataFile", &hp)?;
    let data_path = dir.join(data_file);
    let bytes = fs::read(&data_path).map_err(|e| IngestError::io(&data_path, e))?;
    let frame = n_chan * format.width();
    if frame == 0 || bytes.len() % frame != 0 {
        return Err(IngestError::Truncated {
            path: data_path.display().to_string(),
            bytes: bytes.len(),
            frame,
        });
    }
    let samples = bytes.len() / frame;
    let mut data = Array2::<f64>::zeros((n_chan, samples));
    for (s, chunk) in bytes.chunks_exact(frame).enumerate() {
        for (c, raw) in chunk.chunks_exact(format.width()).enumerate() {
            let v = match format {
                BinaryFormat::Int16 => i16::from_le_bytes([raw[0], raw[1]]) as f64,
                BinaryFormat::Float32 => f32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64,
            };
            data[[c, s]] = v * channels[c].scale;
        }
    }

    let markers = match ini.get("Common Infos").and_then(|s| s.get("MarkerFile")) {
        Some((file, _)) => {
            let mp = dir.join(file);
            parse_markers(&read_text(&mp)?, &mp.display().to_string(), samples)?
        }
        None => Vec::new(),
    };
    Ok(RawRecording::new(
        data,
        rate,
        channels.into_iter().map(|c| c.name).collect(),
        markers,
    )?)
}

/// Writes `rec` as an `IEEE_FLOAT_32` triplet next to `header_path`.
///
/// Returns the paths of the header, marker and data files.
pub fn write_brainvision(
    rec: &RawRecording,
    header_path: impl AsRef<Path>,
) -> Result<[PathBuf; 3], IngestError> {
    let header_path = header_path.as_ref();
    let stem = header_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "recording".into());
    let dir = header_path.parent().unwrap_or(Path::new("."));
    let eeg_name = format!("{stem}.eeg");
    let vmrk_name = format!("{stem}.vmrk");
    let format = BinaryFormat::Float32;

    let mut vhdr = String::new();
    vhdr.push_str("Brain Vision Data Exchange Header File Version 1.0\n\n[Common Infos]\nCodepage=UTF-8\n");
    let _ = writeln!(vhdr, "DataFile={eeg_name}\nMarkerFile={vmrk_name}");
    vhdr.push_str("DataFormat=BINARY\nDataOrientation=MULTIPLEXED\n");
    let _ = writeln!(vhdr, "NumberOfChannels={}", rec.channel_names().len());
    let _ = writeln!(vhdr, "SamplingInterval={}", 1e6 / rec.rate());
    let _ = writeln!(vhdr, "\n[Binary Infos]\nBinaryFormat={}\n\n[Channel Infos]", format.as_str());
    for (i, name) in rec.channel_names().iter().enumerate() {
        let _ = writeln!(vhdr, "Ch{}={},,1,µV", i + 1, name.replace(',', "\\1"));
    }

    let mut vmrk = String::new();
    vmrk.push_str("Brain Vision Data Exchange Marker File, Version 1.0\n\n[Common Infos]\nCodepage=UTF-8\n");
    let _ = writeln!(vmrk, "DataFile={eeg_name}\n\n[Marker Infos]");
    for (i, m) in rec.markers().iter().enumerate() {
        let _ = writeln!(vmrk, "Mk{}={},{},{},1,0", i + 1, m.kind, m.code.replace(',', "\\1"), m.sample);
    }

    let data = rec.data();
    let mut bin = Vec::with_capacity(data.len() * format.width());
    for s in 0..data.ncols() {
        for c in 0..data.nrows() {
            bin.extend_from_slice(&(data[[c, s]] as f32).to_le_bytes());
        }
    }

    let paths = [header_path.to_path_buf(), dir.join(vmrk_name), dir.join(eeg_name)];
    fs::write(&paths[0], vhdr).map_err(|e| IngestError::io(&paths[0], e))?;
    fs::write(&paths[1], vmrk).map_err(|e| IngestError::io(&paths[1], e))?;
    fs::write(&paths[2], bin).map_err(|e| IngestError::io(&paths[2], e))?;
    Ok(paths)
}
