//! Change-point relabelling of the pre-movement windows.
//!
//! Windows before `[-2.00, -1.00]` s are NoLRP and window `[-1.00, 0.00]` s
//! is LRP. In between, the change point is placed right after the latest
//! run of three consecutive NoLRP predictions; without such a run the whole
//! range is LRP.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::domain::Label;

pub const N_WINDOWS: usize = 81;
/// First window of the relabelling range (`[-2.00, -1.00]` s).
pub const RANGE_START: usize = 60;
/// Last window of the range, also the fixed LRP window (`[-1.00, 0.00]` s).
pub const RANGE_END: usize = 80;
pub const RANGE_LEN: usize = RANGE_END - RANGE_START + 1;

/// Whether the prediction for the fixed LRP window takes part in the scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelabelScan {
    #[default]
    IncludeFixed,
    ExcludeFixed,
}

impl RelabelScan {
    pub fn as_str(self) -> &'static str {
        match self {
            RelabelScan::IncludeFixed => "include-fixed",
            RelabelScan::ExcludeFixed => "exclude-fixed",
        }
    }
}

impl std::str::FromStr for RelabelScan {
    type Err = crate::domain::ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "include-fixed" => Ok(RelabelScan::IncludeFixed),
            "exclude-fixed" => Ok(RelabelScan::ExcludeFixed),
            other => Err(crate::domain::ParseEnumError(other.to_string())),
        }
    }
}

/// Index of the last NoLRP window, or `RANGE_START - 1` when the whole
/// range is LRP.
pub fn change_point(predictions: &[Label], scan: RelabelScan) -> Result<usize, EvalError> {
    if predictions.len() != N_WINDOWS {
        return Err(EvalError::IncompletePredictions {
            expected: N_WINDOWS,
            found: predictions.len(),
        });
    }
    let last = match scan {
        RelabelScan::IncludeFixed => RANGE_END,
        RelabelScan::ExcludeFixed => RANGE_END - 1,
    };
    let mut run = 0;
    for k in (RANGE_START..=last).rev() {
        if predictions[k].is_lrp() {
            run = 0;
        } else {
            run += 1;
            if run == 3 {
                return Ok(k + 2);
            }
        }
    }
    Ok(RANGE_START - 1)
}

/// Ground-truth labels for one trial from its 81 predictions.
pub fn relabel(predictions: &[Label], scan: RelabelScan) -> Result<Vec<Label>, EvalError> {
    let cp = change_point(predictions, scan)?;
    let mut truth: Vec<Label> = (0..N_WINDOWS).map(|k| if k <= cp { Label::NoLrp } else { Label::Lrp }).collect();
    truth[RANGE_END] = Label::Lrp;
    Ok(truth)
}
