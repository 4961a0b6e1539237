//! Vendor export adapters: format detection, row parsing into
//! [`RawRecord`]s, and unit normalization.
//!
//! Every vendor file carries one item kind. A file only fails as a whole on
//! encoding or header problems (or an unmappable sleep-stage token); bad rows
//! become [`Diagnostic`]s and parsing continues.

mod config;
mod normalize;
mod render;
mod stage;
mod timestamp;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use config::{
    AdapterConfig, ColumnRole, ColumnSpec, ConfigError, FileSchema, UnsupportedColumn, ValueKind,
};
pub use normalize::{normalize_unit, InvalidValue};
pub use render::render_export;
pub use stage::{map_sleep_stage, UnknownStage};
pub use timestamp::{parse_timestamp, vendor_formats, TimestampError, TimestampFormat};

use crate::model::{DatasetTz, ItemKind, LocalTimestamp, SleepStage, VendorKind};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SourceLine {
    pub file: Arc<str>,
    pub line: u32,
}

impl SourceLine {
    pub fn new(file: &str, line: u32) -> Self {
        SourceLine {
            file: Arc::from(file),
            line,
        }
    }
}

impl fmt::Display for SourceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// A numeric cell as the vendor wrote it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quantity {
    Int(i64),
    Real(f64),
}

impl Quantity {
    pub fn is_negative(self) -> bool {
        match self {
            Quantity::Int(n) => n < 0,
            Quantity::Real(x) => x < 0.0,
        }
    }

    /// Integer value; `None` for reals (normalize first).
    pub fn as_int(self) -> Option<i64> {
        match self {
            Quantity::Int(n) => Some(n),
            Quantity::Real(_) => None,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Int(n) => write!(f, "{n}"),
            Quantity::Real(x) => write!(f, "{x}"),
        }
    }
}

/// One vendor measurement or span before integration.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub vendor: VendorKind,
    pub item: ItemKind,
    pub start: LocalTimestamp,
    /// Exclusive end of a span; absent for point samples and day-level rows.
    pub end: Option<LocalTimestamp>,
    /// Steps for step rows, steps taken during an exercise session, bpm,
    /// percent, or minutes for day-level stage rows.
    pub value: Option<Quantity>,
    pub stage: Option<SleepStage>,
    /// Per-day aggregate; `start` is that day's midnight.
    pub day_level: bool,
    pub source: SourceLine,
}

impl RawRecord {
    pub fn span_seconds(&self) -> Option<i64> {
        self.end.map(|e| e.seconds_since(self.start))
    }

    fn dedup_key(
        &self,
    ) -> (
        ItemKind,
        i64,
        Option<i64>,
        Option<(bool, i64)>,
        Option<SleepStage>,
    ) {
        let value = self.value.map(|q| match q {
            Quantity::Int(n) => (false, n),
            Quantity::Real(x) => (true, x.to_bits() as i64),
        });
        (
            self.item,
            self.start.seconds(),
            self.end.map(|e| e.seconds()),
            value,
            self.stage,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagnosticCode {
    MalformedRow,
    BadTimestamp,
    BadNumber,
    DurationMismatch,
    DegenerateSpan,
    DuplicateRow,
    InvalidValue,
    UnsupportedItem,
    UnknownFormat,
    FileError,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::MalformedRow => "malformed-row",
            DiagnosticCode::BadTimestamp => "bad-timestamp",
            DiagnosticCode::BadNumber => "bad-number",
            DiagnosticCode::DurationMismatch => "duration-mismatch",
            DiagnosticCode::DegenerateSpan => "degenerate-span",
            DiagnosticCode::DuplicateRow => "duplicate-row",
            DiagnosticCode::InvalidValue => "invalid-value",
            DiagnosticCode::UnsupportedItem => "unsupported-item",
            DiagnosticCode::UnknownFormat => "unknown-format",
            DiagnosticCode::FileError => "file-error",
        }
    }

    /// Row-level codes account for exactly one input row that produced no
    /// record.
    pub fn is_row_level(self) -> bool {
        !matches!(
            self,
            DiagnosticCode::UnsupportedItem
                | DiagnosticCode::UnknownFormat
                | DiagnosticCode::FileError
        )
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rendered as `file:line: code: message`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub file: Arc<str>,
    pub line: u32,
    pub code: DiagnosticCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.file, self.line, self.code, self.message
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdapterError {
    #[error("{file}: content is not valid UTF-8")]
    Encoding { file: String },
    #[error("{file}: header matches no registered export schema")]
    UnknownFormat { file: String },
    #[error("{file}: header matches schemas of several vendors: {vendors:?}")]
    AmbiguousFormat {
        file: String,
        vendors: Vec<VendorKind>,
    },
    #[error("{file}: header does not match any {vendor} schema")]
    Schema { file: String, vendor: VendorKind },
    #[error("{file}:{line}: {source}")]
    UnknownStage {
        file: String,
        line: u32,
        source: UnknownStage,
    },
}

/// Result of parsing one export file.
#[derive(Clone, Debug)]
pub struct ParsedFile {
    pub file_name: String,
    pub vendor: VendorKind,
    pub item: ItemKind,
    pub records: Vec<RawRecord>,
    pub diagnostics: Vec<Diagnostic>,
    /// Non-blank rows after the header.
    pub data_rows: usize,
}

impl ParsedFile {
    pub fn row_diagnostics(&self) -> usize {
        self.diagnostics
            .iter()
            .filter(|d| d.code.is_row_level())
            .count()
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(',')
        .map(|f| {
            let f = f.trim();
            f.strip_prefix('"')
                .and_then(|s| s.strip_suffix('"'))
                .unwrap_or(f)
        })
        .collect()
}

fn decode(file_name: &str, content: &[u8]) -> Result<String, AdapterError> {
    let text = std::str::from_utf8(content).map_err(|_| AdapterError::Encoding {
        file: file_name.to_string(),
    })?;
    Ok(text.strip_prefix('\u{feff}').unwrap_or(text).to_string())
}

/// The schema whose columns all appear in `header_line`. When several of one
/// vendor match, the one naming the most columns wins.
pub fn detect_schema<'a>(
    file_name: &str,
    header_line: &str,
    config: &'a AdapterConfig,
) -> Result<&'a FileSchema, AdapterError> {
    let header_line = header_line.strip_prefix('\u{feff}').unwrap_or(header_line);
    let header = split_fields(header_line);
    if header_line.trim().is_empty() {
        return Err(AdapterError::UnknownFormat {
            file: file_name.to_string(),
        });
    }
    let matches: Vec<&FileSchema> = config
        .schemas
        .iter()
        .filter(|s| s.matches(&header))
        .collect();
    let mut vendors: Vec<VendorKind> = matches.iter().map(|s| s.vendor).collect();
    vendors.sort();
    vendors.dedup();
    match vendors.len() {
        0 => Err(AdapterError::UnknownFormat {
            file: file_name.to_string(),
        }),
        1 => {
            let widest = matches.iter().map(|s| s.columns.len()).max().unwrap();
            let best: Vec<_> = matches
                .into_iter()
                .filter(|s| s.columns.len() == widest)
                .collect();
            if best.len() > 1 {
                return Err(AdapterError::AmbiguousFormat {
                    file: file_name.to_string(),
                    vendors,
                });
            }
            Ok(best[0])
        }
        _ => Err(AdapterError::AmbiguousFormat {
            file: file_name.to_string(),
            vendors,
        }),
    }
}

pub fn detect_vendor(
    file_name: &str,
    header_line: &str,
    config: &AdapterConfig,
) -> Result<VendorKind, AdapterError> {
    detect_schema(file_name, header_line, config).map(|s| s.vendor)
}

/// Detects the file's vendor and item from its header, then parses it.
pub fn parse_file(
    file_name: &str,
    content: &[u8],
    config: &AdapterConfig,
    tz: &DatasetTz,
) -> Result<ParsedFile, AdapterError> {
    let text = decode(file_name, content)?;
    let header = text.lines().next().unwrap_or("");
    let schema = detect_schema(file_name, header, config)?;
    parse_with_schema(file_name, &text, schema, config, tz)
}

/// Parses a file known to come from `vendor`.
pub fn parse_export(
    vendor: VendorKind,
    file_name: &str,
    content: &[u8],
    config: &AdapterConfig,
    tz: &DatasetTz,
) -> Result<ParsedFile, AdapterError> {
    let text = decode(file_name, content)?;
    let header = text.lines().next().unwrap_or("");
    let schema = match detect_schema(file_name, header, config) {
        Ok(s) if s.vendor == vendor => s,
        Ok(_) | Err(AdapterError::UnknownFormat { .. }) => {
            return Err(AdapterError::Schema {
                file: file_name.to_string(),
                vendor,
            })
        }
        Err(e) => return Err(e),
    };
    parse_with_schema(file_name, &text, schema, config, tz)
}

struct RowError {
    code: DiagnosticCode,
    message: String,
}

impl RowError {
    fn new(code: DiagnosticCode, message: impl Into<String>) -> Self {
        RowError {
            code,
            message: message.into(),
        }
    }
}

enum RowFailure {
    Row(RowError),
    Stage(UnknownStage),
}

impl From<RowError> for RowFailure {
    fn from(e: RowError) -> Self {
        RowFailure::Row(e)
    }
}

struct RowParser<'a> {
    schema: &'a FileSchema,
    config: &'a AdapterConfig,
    tz: &'a DatasetTz,
    /// Header position of each schema column, in schema order.
    positions: Vec<usize>,
    width: usize,
}

impl RowParser<'_> {
    fn field<'f>(&self, fields: &[&'f str], role: ColumnRole) -> Option<&'f str> {
        self.schema
            .columns
            .iter()
            .position(|c| c.role == role)
            .map(|i| fields[self.positions[i]])
    }

    fn int(&self, name: &str, text: &str) -> Result<i64, RowError> {
        text.parse().map_err(|_| {
            RowError::new(
                DiagnosticCode::BadNumber,
                format!("{name}: {text:?} is not an integer"),
            )
        })
    }

    fn quantity(&self, text: &str) -> Result<Quantity, RowError> {
        match self.schema.value_kind {
            ValueKind::Integer => self.int("value", text).map(Quantity::Int),
            ValueKind::Float => text
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Quantity::Real)
                .ok_or_else(|| {
                    RowError::new(
                        DiagnosticCode::BadNumber,
                        format!("value: {text:?} is not a number"),
                    )
                }),
        }
    }

    fn timestamp(&self, text: &str) -> Result<LocalTimestamp, RowError> {
        self.schema
            .timestamp
            .parse(text, self.tz)
            .map_err(|e| RowError::new(DiagnosticCode::BadTimestamp, e.to_string()))
    }

    fn parse(&self, fields: &[&str], source: SourceLine) -> Result<RawRecord, RowFailure> {
        use ColumnRole as R;
        let schema = self.schema;
        if fields.len() != self.width {
            return Err(RowError::new(
                DiagnosticCode::MalformedRow,
                format!("expected {} fields, found {}", self.width, fields.len()),
            )
            .into());
        }
        let start = match (self.field(fields, R::Start), self.field(fields, R::Date)) {
            (Some(s), _) => self.timestamp(s)?,
            (None, Some(d)) => match self.field(fields, R::Time) {
                Some(t) => self.timestamp(&format!("{d} {t}"))?,
                None => self.timestamp(d)?,
            },
            (None, None) => unreachable!("validated schema has a start column"),
        };

        let duration_min = self
            .field(fields, R::DurationMinutes)
            .map(|t| self.int("duration", t))
            .transpose()?;
        let duration_sec = self
            .field(fields, R::DurationSeconds)
            .map(|t| self.int("duration", t))
            .transpose()?;
        for d in [duration_min, duration_sec].into_iter().flatten() {
            if d < 0 {
                return Err(
                    RowError::new(DiagnosticCode::InvalidValue, "negative duration").into(),
                );
            }
        }

        let end = if schema.item.is_biometric() || schema.day_level {
            None
        } else if let Some(e) = self.field(fields, R::End) {
            let end = self.timestamp(e)?;
            if let Some(m) = duration_min {
                let span = end.seconds_since(start);
                let span_min = crate::model::round_div(span.max(0) as u64, 60) as i64;
                if (span_min - m).abs() > i64::from(self.config.duration_tolerance_minutes) {
                    return Err(RowError::new(
                        DiagnosticCode::DurationMismatch,
                        format!("duration column says {m} min, span is {span_min} min"),
                    )
                    .into());
                }
            }
            Some(end)
        } else if let Some(m) = duration_min {
            Some(start.plus_seconds(m * 60))
        } else if let Some(s) = duration_sec {
            Some(start.plus_seconds(s))
        } else {
            Some(start.plus_seconds(i64::from(self.config.point_span_seconds)))
        };
        if let Some(e) = end {
            if e <= start {
                return Err(RowError::new(
                    DiagnosticCode::DegenerateSpan,
                    format!("end {e} is not after start {start}"),
                )
                .into());
            }
        }

        let value = match self.field(fields, R::Value) {
            Some(t) => Some(self.quantity(t)?),
            None => match self.field(fields, R::Steps) {
                Some("") | None => None,
                Some(t) => Some(Quantity::Int(self.int("steps", t)?)),
            },
        };

        let stage = match self.field(fields, R::Stage) {
            Some(t) => {
                Some(map_sleep_stage(schema.vendor, t, self.config).map_err(RowFailure::Stage)?)
            }
            None => None,
        };

        Ok(RawRecord {
            vendor: schema.vendor,
            item: schema.item,
            start,
            end,
            value,
            stage,
            day_level: schema.day_level,
            source,
        })
    }
}

fn parse_with_schema(
    file_name: &str,
    text: &str,
    schema: &FileSchema,
    config: &AdapterConfig,
    tz: &DatasetTz,
) -> Result<ParsedFile, AdapterError> {
    let file: Arc<str> = Arc::from(file_name);
    let mut lines = text.lines();
    let header = split_fields(lines.next().unwrap_or(""));
    let positions = schema
        .columns
        .iter()
        .map(|c| header.iter().position(|h| *h == c.name))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| AdapterError::Schema {
            file: file_name.to_string(),
            vendor: schema.vendor,
        })?;
    let parser = RowParser {
        schema,
        config,
        tz,
        positions,
        width: header.len(),
    };

    let mut diagnostics = Vec::new();
    for u in &config.unsupported_columns {
        if u.vendor == schema.vendor && header.contains(&u.column.as_str()) {
            diagnostics.push(Diagnostic {
                file: file.clone(),
                line: 1,
                code: DiagnosticCode::UnsupportedItem,
                message: format!(
                    "column {:?} ({}) is not ingested from {}; ignored",
                    u.column, u.item, schema.vendor
                ),
            });
        }
    }

    let mut records = Vec::new();
    let mut seen: HashMap<_, u32> = HashMap::new();
    let mut data_rows = 0;
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        data_rows += 1;
        let line_no = idx as u32 + 2;
        let fields = split_fields(line);
        let source = SourceLine {
            file: file.clone(),
            line: line_no,
        };
        match parser.parse(&fields, source) {
            Ok(rec) => match seen.get(&rec.dedup_key()) {
                Some(first) => diagnostics.push(Diagnostic {
                    file: file.clone(),
                    line: line_no,
                    code: DiagnosticCode::DuplicateRow,
                    message: format!("identical to line {first}; collapsed"),
                }),
                None => {
                    seen.insert(rec.dedup_key(), line_no);
                    records.push(rec);
                }
            },
            Err(RowFailure::Row(e)) => diagnostics.push(Diagnostic {
                file: file.clone(),
                line: line_no,
                code: e.code,
                message: e.message,
            }),
            Err(RowFailure::Stage(source)) => {
                return Err(AdapterError::UnknownStage {
                    file: file_name.to_string(),
                    line: line_no,
                    source,
                })
            }
        }
    }

    Ok(ParsedFile {
        file_name: file_name.to_string(),
        vendor: schema.vendor,
        item: schema.item,
        records,
        diagnostics,
        data_rows,
    })
}
