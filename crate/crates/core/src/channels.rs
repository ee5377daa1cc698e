//! Electrode vocabulary and the named channel-set registry.
//!
//! The vocabulary is the 64-electrode actiCap layout (extended 10-20 system,
//! FCz reference). Every electrode carries an approximate position on a flat
//! scalp grid: `x` counts 10-10 columns from the midline (negative = left
//! hemisphere) and `y` counts rows from the central line (negative = frontal).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ConditionId, MovementCondition, StudyCondition};

/// `(name, x, y)` for each recorded electrode, in amplifier order.
const ELECTRODES: [(&str, i8, i8); 64] = [
    ("Fp1", -1, -4),
    ("Fz", 0, -2),
    ("F3", -2, -2),
    ("F7", -4, -2),
    ("FT9", -5, -1),
    ("FC5", -3, -1),
    ("FC1", -1, -1),
    ("C3", -2, 0),
    ("T7", -4, 0),
    ("TP9", -5, 1),
    ("CP5", -3, 1),
    ("CP1", -1, 1),
    ("Pz", 0, 2),
    ("P3", -2, 2),
    ("P7", -4, 2),
    ("O1", -1, 4),
    ("Oz", 0, 4),
    ("O2", 1, 4),
    ("P4", 2, 2),
    ("P8", 4, 2),
    ("TP10", 5, 1),
    ("CP6", 3, 1),
    ("CP2", 1, 1),
    ("Cz", 0, 0),
    ("C4", 2, 0),
    ("T8", 4, 0),
    ("FT10", 5, -1),
    ("FC6", 3, -1),
    ("FC2", 1, -1),
    ("F4", 2, -2),
    ("F8", 4, -2),
    ("Fp2", 1, -4),
    ("AF7", -4, -3),
    ("AF3", -2, -3),
    ("AF4", 2, -3),
    ("AF8", 4, -3),
    ("F5", -3, -2),
    ("F1", -1, -2),
    ("F2", 1, -2),
    ("F6", 3, -2),
    ("FT7", -4, -1),
    ("FC3", -2, -1),
    ("FC4", 2, -1),
    ("FT8", 4, -1),
    ("C5", -3, 0),
    ("C1", -1, 0),
    ("C2", 1, 0),
    ("C6", 3, 0),
    ("TP7", -4, 1),
    ("CP3", -2, 1),
    ("CPz", 0, 1),
    ("CP4", 2, 1),
    ("TP8", 4, 1),
    ("P5", -3, 2),
    ("P1", -1, 2),
    ("P2", 1, 2),
    ("P6", 3, 2),
    ("PO7", -4, 3),
    ("PO3", -2, 3),
    ("POz", 0, 3),
    ("PO4", 2, 3),
    ("PO8", 4, 3),
    ("Fpz", 0, -4),
    ("Iz", 0, 5),
];

/// Built-in channel sets and condition table, in the plain-text registry format.
pub const DEFAULT_REGISTRY: &str = include_str!("channel_sets.conf");

/// Names of all 64 electrodes in amplifier order.
pub fn vocabulary() -> impl Iterator<Item = &'static str> {
    ELECTRODES.iter().map(|e| e.0)
}

/// Grid position of an electrode, case-insensitive.
pub fn electrode_position(name: &str) -> Option<(f64, f64)> {
    ELECTRODES
        .iter()
        .find(|e| e.0.eq_ignore_ascii_case(name))
        .map(|e| (f64::from(e.1), f64::from(e.2)))
}

/// Canonical spelling of an electrode name, if it belongs to the vocabulary.
pub fn canonical_name(name: &str) -> Option<&'static str> {
    ELECTRODES
        .iter()
        .find(|e| e.0.eq_ignore_ascii_case(name.trim()))
        .map(|e| e.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hemisphere {
    Left,
    Midline,
    Right,
}

/// Hemisphere from the 10-20 label: odd digits left, even right, `z` midline.
pub fn hemisphere(name: &str) -> Option<Hemisphere> {
    let name = name.trim();
    if name.ends_with(['z', 'Z']) {
        return Some(Hemisphere::Midline);
    }
    let digits: String = name.chars().skip_while(|c| !c.is_ascii_digit()).collect();
    let n: u32 = digits.parse().ok()?;
    Some(if n % 2 == 1 {
        Hemisphere::Left
    } else {
        Hemisphere::Right
    })
}

/// Label with left and right hemisphere swapped (`C3` ↔ `C4`); midline unchanged.
pub fn mirror_name(name: &str) -> Option<&'static str> {
    let (x, y) = electrode_position(name)?;
    ELECTRODES
        .iter()
        .find(|e| f64::from(e.1) == -x && f64::from(e.2) == y)
        .map(|e| e.0)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("unknown channel set `{name}`; available: {}", available.join(", "))]
    UnknownSet { name: String, available: Vec<String> },
    #[error("channel set `{set}`: `{channel}` is not an electrode of the 64-channel cap")]
    UnknownChannel { set: String, channel: String },
    #[error("channel set `{set}`: duplicate channel `{channel}`")]
    DuplicateChannel { set: String, channel: String },
    #[error("channel set `{0}` is empty")]
    Empty(String),
    #[error("registry line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("condition {id} must be {expected}, config says {found}")]
    ConditionMismatch {
        id: ConditionId,
        expected: String,
        found: String,
    },
    #[error("cannot read registry file {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelSetKind {
    Custom,
    Standard,
}

impl fmt::Display for ChannelSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelSetKind::Custom => "custom",
            ChannelSetKind::Standard => "standard",
        })
    }
}

/// An ordered, duplicate-free list of electrodes from the cap vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelSet {
    name: String,
    kind: ChannelSetKind,
    channels: Vec<String>,
}

impl ChannelSet {
    pub fn new<S: AsRef<str>>(
        name: impl Into<String>,
        kind: ChannelSetKind,
        channels: &[S],
    ) -> Result<Self, RegistryError> {
        let name = name.into();
        if channels.is_empty() {
            return Err(RegistryError::Empty(name));
        }
        let mut out: Vec<String> = Vec::with_capacity(channels.len());
        for ch in channels {
            let canon = canonical_name(ch.as_ref()).ok_or_else(|| RegistryError::UnknownChannel {
                set: name.clone(),
                channel: ch.as_ref().trim().to_string(),
            })?;
            if out.iter().any(|c| c == canon) {
                return Err(RegistryError::DuplicateChannel {
                    set: name,
                    channel: canon.to_string(),
                });
            }
            out.push(canon.to_string());
        }
        Ok(Self {
            name,
            kind,
            channels: out,
        })
    }

    /// All 64 electrodes in amplifier order.
    pub fn full_cap() -> Self {
        Self {
            name: "all-64".into(),
            kind: ChannelSetKind::Standard,
            channels: vocabulary().map(String::from).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ChannelSetKind {
        self.kind
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn contains(&self, channel: &str) -> bool {
        self.channels.iter().any(|c| c.eq_ignore_ascii_case(channel))
    }
}

/// Read-only lookup of channel sets and the train/test condition table.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRegistry {
    sets: BTreeMap<String, ChannelSet>,
    conditions: [StudyCondition; 3],
}

impl ChannelRegistry {
    /// Registry holding the built-in defaults.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_REGISTRY).expect("built-in channel registry is valid")
    }

    /// Parses the registry format:
    ///
    /// ```text
    /// # comment
    /// [custom]
    /// custom-4 = C1, C3, FC1, CP1
    /// [standard]
    /// standard-16 = Fp1, Fp2, ...
    /// [conditions]
    /// A = unilateral -> unilateral
    /// ```
    ///
    /// Outside a `[custom]`/`[standard]` section the kind is taken from the
    /// `custom-`/`standard-` name prefix.
    pub fn parse(text: &str) -> Result<Self, RegistryError> {
        let mut reg = Self {
            sets: BTreeMap::new(),
            conditions: StudyCondition::table(),
        };
        reg.merge_text(text)?;
        Ok(reg)
    }

    /// Built-in defaults overridden/extended by a user registry file.
    pub fn builtin_with_overrides(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|e| RegistryError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut reg = Self::builtin();
        reg.merge_text(&text)?;
        Ok(reg)
    }

    fn merge_text(&mut self, text: &str) -> Result<(), RegistryError> {
        #[derive(Clone, Copy)]
        enum Section {
            None,
            Sets(ChannelSetKind),
            Conditions,
        }
        let mut section = Section::None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(inner) = line.strip_prefix('[') {
                let inner = inner.strip_suffix(']').ok_or_else(|| RegistryError::Syntax {
                    line: line_no,
                    message: format!("unterminated section header `{line}`"),
                })?;
                section = match inner.trim().to_ascii_lowercase().as_str() {
                    "custom" => Section::Sets(ChannelSetKind::Custom),
                    "standard" => Section::Sets(ChannelSetKind::Standard),
                    "conditions" => Section::Conditions,
                    other => {
                        return Err(RegistryError::Syntax {
                            line: line_no,
                            message: format!("unknown section `{other}`"),
                        })
                    }
                };
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| RegistryError::Syntax {
                line: line_no,
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            match section {
                Section::Conditions => self.check_condition(line_no, key, value)?,
                Section::Sets(kind) => self.insert_set(key, kind, value)?,
                Section::None => {
                    let kind = if key.starts_with("custom-") {
                        ChannelSetKind::Custom
                    } else if key.starts_with("standard-") {
                        ChannelSetKind::Standard
                    } else {
                        return Err(RegistryError::Syntax {
                            line: line_no,
                            message: format!(
                                "set `{key}` needs a [custom]/[standard] section or a custom-/standard- prefix"
                            ),
                        });
                    };
                    self.insert_set(key, kind, value)?;
                }
            }
        }
        Ok(())
    }

    fn insert_set(&mut self, name: &str, kind: ChannelSetKind, value: &str) -> Result<(), RegistryError> {
        let channels: Vec<&str> = value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        let set = ChannelSet::new(name, kind, &channels)?;
        self.sets.insert(name.to_string(), set);
        Ok(())
    }

    fn check_condition(&self, line: usize, key: &str, value: &str) -> Result<(), RegistryError> {
        let id: ConditionId = key.parse().map_err(|_| RegistryError::Syntax {
            line,
            message: format!("unknown condition `{key}`"),
        })?;
        let (train, test) = value.split_once("->").ok_or_else(|| RegistryError::Syntax {
            line,
            message: "expected `<train> -> <test>`".into(),
        })?;
        let parse = |s: &str| {
            MovementCondition::from_str(s.trim()).map_err(|_| RegistryError::Syntax {
                line,
                message: format!("unknown movement condition `{}`", s.trim()),
            })
        };
        let (train, test) = (parse(train)?, parse(test)?);
        let expected = StudyCondition::get(id);
        if expected.train != train || expected.test != test {
            return Err(RegistryError::ConditionMismatch {
                id,
                expected: format!("{} -> {}", expected.train, expected.test),
                found: format!("{train} -> {test}"),
            });
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&ChannelSet, RegistryError> {
        self.sets.get(name).ok_or_else(|| RegistryError::UnknownSet {
            name: name.to_string(),
            available: self.sets.keys().cloned().collect(),
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.sets.keys().map(String::as_str)
    }

    pub fn conditions(&self) -> &[StudyCondition; 3] {
        &self.conditions
    }
}

/// Resolves a built-in channel set by name.
pub fn make_channel_set(name: &str) -> Result<ChannelSet, RegistryError> {
    ChannelRegistry::builtin().get(name).cloned()
}

/// Default channel sets evaluated by a study, in report order.
pub const DEFAULT_STUDY_SETS: [&str; 8] = [
    "custom-32",
    "custom-21",
    "custom-16",
    "custom-8",
    "custom-4",
    "standard-32",
    "standard-21",
    "standard-16",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_is_64_unique_names() {
        let mut names: Vec<&str> = vocabulary().collect();
        assert_eq!(names.len(), 64);
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 64);
        assert!(canonical_name("FCz").is_none(), "reference electrode is not recorded");
    }

    #[test]
    fn custom_4_is_c1_and_neighbours() {
        let set = make_channel_set("custom-4").unwrap();
        assert_eq!(set.channels(), ["C1", "C3", "FC1", "CP1"]);
        assert_eq!(set.kind(), ChannelSetKind::Custom);
    }

    #[test]
    fn standard_21_is_classic_montage() {
        let set = make_channel_set("standard-21").unwrap();
        assert_eq!(set.len(), 21);
        for ch in ["Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T7", "C3", "Cz", "C4", "T8", "P7", "P3", "Pz", "P4", "P8", "O1", "O2"] {
            assert!(set.contains(ch), "{ch} missing");
        }
    }

    #[test]
    fn unknown_set_lists_available() {
        let err = make_channel_set("custom-64").unwrap_err();
        match &err {
            RegistryError::UnknownSet { available, .. } => {
                assert!(available.iter().any(|s| s == "custom-32"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("standard-16"));
    }

    #[test]
    fn default_sizes_and_nesting() {
        let reg = ChannelRegistry::builtin();
        for name in DEFAULT_STUDY_SETS {
            let set = reg.get(name).unwrap();
            let n: usize = name.rsplit('-').next().unwrap().parse().unwrap();
            assert_eq!(set.len(), n, "{name}");
        }
        let nested = |small: &str, big: &str| {
            let (s, b) = (reg.get(small).unwrap(), reg.get(big).unwrap());
            s.channels().iter().all(|c| b.contains(c))
        };
        assert!(nested("standard-16", "standard-21"));
        assert!(nested("standard-21", "standard-32"));
        for (s, b) in [("custom-4", "custom-8"), ("custom-8", "custom-16"), ("custom-16", "custom-21"), ("custom-21", "custom-32")] {
            assert!(nested(s, b), "{s} ⊄ {b}");
        }
    }

    #[test]
    fn custom_sets_never_use_right_hemisphere() {
        let reg = ChannelRegistry::builtin();
        for name in reg.names().filter(|n| n.starts_with("custom-")) {
            let set = reg.get(name).unwrap();
            assert!(set.contains("C1"));
            for ch in set.channels() {
                assert_ne!(hemisphere(ch), Some(Hemisphere::Right), "{name}: {ch}");
            }
        }
    }

    #[test]
    fn custom_sets_grow_concentrically_around_c1() {
        // Every channel of a smaller set is at least as close to C1 as every
        // channel added by the next larger set.
        let reg = ChannelRegistry::builtin();
        let dist = |c: &str| {
            let (x, y) = electrode_position(c).unwrap();
            let midline_penalty = if x == 0.0 { 2.0 } else { 0.0 };
            (x + 1.0).powi(2) + y * y + midline_penalty
        };
        let order = ["custom-4", "custom-8", "custom-16", "custom-21", "custom-32"];
        for w in order.windows(2) {
            let small = reg.get(w[0]).unwrap();
            let big = reg.get(w[1]).unwrap();
            let inner = small.channels().iter().map(|c| dist(c)).fold(0.0, f64::max);
            let added = big
                .channels()
                .iter()
                .filter(|c| !small.contains(c))
                .map(|c| dist(c))
                .fold(f64::INFINITY, f64::min);
            assert!(inner <= added, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn lookups_are_deterministic() {
        let a = make_channel_set("custom-16").unwrap();
        let b = make_channel_set("custom-16").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn user_config_overrides_and_validates() {
        let reg = ChannelRegistry::parse("[custom]\nmine = c1, C3\n").unwrap();
        assert_eq!(reg.get("mine").unwrap().channels(), ["C1", "C3"]);
        assert!(matches!(
            ChannelRegistry::parse("custom-x = C1, XX9"),
            Err(RegistryError::UnknownChannel { .. })
        ));
        assert!(matches!(
            ChannelRegistry::parse("custom-x = C1, C1"),
            Err(RegistryError::DuplicateChannel { .. })
        ));
        assert!(matches!(
            ChannelRegistry::parse("[conditions]\nC = unilateral -> bilateral"),
            Err(RegistryError::ConditionMismatch { .. })
        ));
        assert!(matches!(ChannelRegistry::parse("weird = C1"), Err(RegistryError::Syntax { line: 1, .. })));
    }

    #[test]
    fn mirror_swaps_hemispheres() {
        assert_eq!(mirror_name("C3"), Some("C4"));
        assert_eq!(mirror_name("CP1"), Some("CP2"));
        assert_eq!(mirror_name("Cz"), Some("Cz"));
        assert_eq!(mirror_name("TP9"), Some("TP10"));
        for name in vocabulary() {
            assert!(mirror_name(name).is_some(), "{name} has no mirror");
        }
    }
}
