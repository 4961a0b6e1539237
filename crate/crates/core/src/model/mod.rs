//! Canonical vocabulary shared by every stage of the pipeline: timestamps,
//! the window grid, item/vendor enumerations and the integrated frame types.

mod frame;
mod items;
mod time;
mod tz;

use chrono::NaiveDate;
use thiserror::Error;

pub use frame::{
    CanonicalFrame, DailyStageRecord, DailySummary, Dataset, DateSpan, SampleCounts, Sources,
};
pub use items::{ItemKind, SleepStage, VendorKind};
pub use time::{
    align_to_window, overlap_decomposition, LocalTimestamp, WindowGrid, TIMESTAMP_FORMAT,
};
pub use tz::DatasetTz;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("timestamp {0:?} is not in YYYY-MM-DD HH:MM:SS form")]
    BadTimestamp(String),
    #[error("interval of {0} minutes does not divide a day")]
    BadInterval(u32),
    #[error("degenerate span: start {start} is not before end {end}")]
    DegenerateSpan {
        start: LocalTimestamp,
        end: LocalTimestamp,
    },
    #[error("unknown {0} {1:?}")]
    UnknownName(&'static str, String),
    #[error("frame at {window}: {reason}")]
    FrameInvariant {
        window: LocalTimestamp,
        reason: String,
    },
    #[error("frames not strictly ascending at {0}")]
    FrameOrder(LocalTimestamp),
    #[error("collection span does not match the frames")]
    SpanMismatch,
    #[error("date range {0} > {1}")]
    InvertedRange(NaiveDate, NaiveDate),
}

/// Integer division rounding half away from zero, for non-negative operands.
pub fn round_div(numerator: u64, denominator: u64) -> u64 {
    debug_assert!(denominator > 0);
    (2 * numerator + denominator) / (2 * denominator)
}
