//! Single-file container for sessions and fitted models.
//!
//! ```text
//! offset  size  content
//! 0       8     magic "LRPXDATA"
//! 8       4     schema version, u32 LE
//! 12      8     header length H, u64 LE
//! 20      H     header, UTF-8 JSON
//! 20+H    4     CRC-32 of the header bytes, u32 LE
//! then for every block listed in the header, in order:
//!         n     block payload (f64 LE or raw bytes)
//!         4     CRC-32 of the payload, u32 LE
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Attachment, FlaggedSpan, IngestError, MotionTrace, SessionData};
use crate::domain::{Marker, MovementCondition, RawRecording, Trial};

pub const CACHE_MAGIC: &[u8; 8] = b"LRPXDATA";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F64,
    U8,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    F64 { name: String, shape: Vec<usize>, data: Vec<f64> },
    Bytes { name: String, data: Vec<u8> },
}

impl Block {
    pub fn name(&self) -> &str {
        match self {
            Block::F64 { name, .. } | Block::Bytes { name, .. } => name,
        }
    }

    fn encode(&self) -> Vec<u8> {
        match self {
            Block::F64 { data, .. } => data.iter().flat_map(|v| v.to_le_bytes()).collect(),
            Block::Bytes { data, .. } => data.clone(),
        }
    }

    fn descriptor(&self) -> BlockDescriptor {
        match self {
            Block::F64 { name, shape, data } => BlockDescriptor {
                name: name.clone(),
                dtype: Dtype::F64,
                shape: shape.clone(),
                bytes: data.len() * 8,
            },
            Block::Bytes { name, data } => BlockDescriptor {
                name: name.clone(),
                dtype: Dtype::U8,
                shape: vec![data.len()],
                bytes: data.len(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlockDescriptor {
    name: String,
    dtype: Dtype,
    shape: Vec<usize>,
    bytes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: Value,
    blocks: Vec<BlockDescriptor>,
}

/// Decoded container: a kind tag, free-form metadata and named blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: String,
    pub meta: Value,
    pub blocks: Vec<Block>,
}

impl Container {
    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name() == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            kind: self.kind.clone(),
            meta: self.meta.clone(),
            blocks: self.blocks.iter().map(Block::descriptor).collect(),
        };
        let header = serde_json::to_vec(&header).expect("header serialises");
        let mut out = Vec::with_capacity(24 + header.len());
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&SCHEMA_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&crc32fast::hash(&header).to_le_bytes());
        for b in &self.blocks {
            let payload = b.encode();
            out.extend_from_slice(&payload);
            out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &str) -> Result<Self, IngestError> {
        let malformed = |message: &str| IngestError::Container {
            path: path.to_string(),
            message: message.to_string(),
        };
        if bytes.len() < 8 || &bytes[..8] != CACHE_MAGIC {
            return Err(IngestError::BadMagic { path: path.to_string() });
        }
        let mut cur = Cursor { bytes, pos: 8 };
        let version = u32::from_le_bytes(cur.take(4).ok_or_else(|| malformed("truncated version"))?.try_into().unwrap());
        if version == 0 || version > SCHEMA_VERSION {
            return Err(IngestError::UnsupportedVersion {
                path: path.to_string(),
                found: version,
                supported: SCHEMA_VERSION,
            });
        }
        let len = u64::from_le_bytes(cur.take(8).ok_or_else(|| malformed("truncated header length"))?.try_into().unwrap());
        let header_bytes = usize::try_from(len)
            .ok()
            .and_then(|l| cur.take(l))
            .ok_or_else(|| malformed("truncated header"))?;
        cur.check_crc(header_bytes, path, "header")?;
        let header: Header = serde_json::from_slice(header_bytes).map_err(|e| malformed(&format!("header: {e}")))?;

        let mut blocks = Vec::with_capacity(header.blocks.len());
        for d in header.blocks {
            let payload = cur
                .take(d.bytes)
                .ok_or_else(|| malformed(&format!("truncated block `{}`", d.name)))?;
            cur.check_crc(payload, path, &format!("block `{}`", d.name))?;
            blocks.push(match d.dtype {
                Dtype::F64 => {
                    if d.bytes % 8 != 0 || d.shape.iter().product::<usize>() * 8 != d.bytes {
                        return Err(malformed(&format!("block `{}` shape disagrees with its size", d.name)));
                    }
                    Block::F64 {
                        name: d.name,
                        shape: d.shape,
                        data: payload
                            .chunks_exact(8)
                            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                            .collect(),
                    }
                }
                Dtype::U8 => Block::Bytes {
                    name: d.name,
                    data: payload.to_vec(),
                },
            });
        }
        if cur.pos != bytes.len() {
            return Err(malformed("trailing bytes after last block"));
        }
        Ok(Container {
            kind: header.kind,
            meta: header.meta,
            blocks,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    fn check_crc(&mut self, payload: &[u8], path: &str, section: &str) -> Result<(), IngestError> {
        let stored = self.take(4).ok_or_else(|| IngestError::Container {
            path: path.to_string(),
            message: format!("missing checksum for {section}"),
        })?;
        if u32::from_le_bytes(stored.try_into().unwrap()) != crc32fast::hash(payload) {
            return Err(IngestError::Checksum {
                path: path.to_string(),
                section: section.to_string(),
            });
        }
        Ok(())
    }
}

/// Writes via a temporary sibling and rename, so readers never see a partial file.
pub fn write_container(container: &Container, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    let mut f = fs::File::create(&tmp).map_err(|e| IngestError::io(&tmp, e))?;
    f.write_all(&container.to_bytes())
        .and_then(|_| f.sync_all())
        .map_err(|e| IngestError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| IngestError::io(path, e))
}

pub fn read_container(path: impl AsRef<Path>) -> Result<Container, IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| IngestError::io(path, e))?;
    Container::from_bytes(&bytes, &path.display().to_string())
}

const SESSION_KIND: &str = "session";

#[derive(Serialize, Deserialize)]
struct SessionMeta {
    subject_id: String,
    task: MovementCondition,
    set_index: usize,
    rate: f64,
    channel_names: Vec<String>,
    markers: Vec<Marker>,
    motion_rate: f64,
    motion_markers: Vec<String>,
    motion_flagged: Vec<FlaggedSpan>,
    trials: Vec<Trial>,
    attachments: Vec<String>,
}

pub fn session_to_container(session: &SessionData) -> Container {
    let eeg = session.eeg.data();
    let motion = &session.motion.positions;
    let meta = SessionMeta {
        subject_id: session.subject_id.clone(),
        task: session.task,
        set_index: session.set_index,
        rate: session.eeg.rate(),
        channel_names: session.eeg.channel_names().to_vec(),
        markers: session.eeg.markers().to_vec(),
        motion_rate: session.motion.rate,
        motion_markers: session.motion.marker_names.clone(),
        motion_flagged: session.motion.flagged.clone(),
        trials: session.trials.clone(),
        attachments: session.attachments.iter().map(|a| a.name.clone()).collect(),
    };
    let mut blocks = vec![
        Block::F64 {
            name: "eeg".into(),
            shape: eeg.shape().to_vec(),
            data: eeg.iter().copied().collect(),
        },
        Block::F64 {
            name: "motion".into(),
            shape: motion.shape().to_vec(),
            data: motion.iter().copied().collect(),
        },
    ];
    for a in &session.attachments {
        blocks.push(Block::Bytes {
            name: format!("attachment:{}", a.name),
            data: a.bytes.clone(),
        });
    }
    Container {
        kind: SESSION_KIND.into(),
        meta: serde_json::to_value(meta).expect("session metadata serialises"),
        blocks,
    }
}

pub fn session_from_container(c: Container, path: &str) -> Result<SessionData, IngestError> {
    let malformed = |message: String| IngestError::Container {
        path: path.to_string(),
        message,
    };
    if c.kind != SESSION_KIND {
        return Err(malformed(format!("expected a session, found `{}`", c.kind)));
    }
    let meta: SessionMeta = serde_json::from_value(c.meta.clone()).map_err(|e| malformed(format!("metadata: {e}")))?;
    let f64_block = |name: &str, dims: usize| -> Result<(Vec<usize>, Vec<f64>), IngestError> {
        match c.block(name) {
            Some(Block::F64 { shape, data, .. }) if shape.len() == dims => Ok((shape.clone(), data.clone())),
            _ => Err(malformed(format!("missing or malformed block `{name}`"))),
        }
    };
    let (shape, data) = f64_block("eeg", 2)?;
    let eeg = Array2::from_shape_vec((shape[0], shape[1]), data).map_err(|e| malformed(e.to_string()))?;
    let eeg = RawRecording::new(eeg, meta.rate, meta.channel_names, meta.markers)?;
    let (shape, data) = f64_block("motion", 3)?;
    let positions =
        Array3::from_shape_vec((shape[0], shape[1], shape[2]), data).map_err(|e| malformed(e.to_string()))?;
    let mut attachments = Vec::with_capacity(meta.attachments.len());
    for name in meta.attachments {
        match c.block(&format!("attachment:{name}")) {
            Some(Block::Bytes { data, .. }) => attachments.push(Attachment {
                name,
                bytes: data.clone(),
            }),
            _ => return Err(malformed(format!("missing attachment `{name}`"))),
        }
    }
    Ok(SessionData {
        subject_id: meta.subject_id,
        task: meta.task,
        set_index: meta.set_index,
        eeg,
        motion: MotionTrace {
            positions,
            rate: meta.motion_rate,
            marker_names: meta.motion_markers,
            flagged: meta.motion_flagged,
        },
        trials: meta.trials,
        attachments,
    })
}

pub fn cache_dataset(session: &SessionData, path: impl AsRef<Path>) -> Result<(), IngestError> {
    write_container(&session_to_container(session), path)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<SessionData, IngestError> {
    let path = path.as_ref();
    session_from_container(read_container(path)?, &path.display().to_string())
}
