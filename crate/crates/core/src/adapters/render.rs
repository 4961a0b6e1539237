use super::stage::stage_token;
use super::{AdapterConfig, ColumnRole, FileSchema, Quantity, RawRecord};
use crate::model::{round_div, DatasetTz};

/// Writes records back out in `schema`'s layout (header plus one row each).
///
/// Used to build fixtures and to check that parsing is lossless. Duration
/// columns are written in whole minutes, so spans that are not a whole
/// number of minutes only survive when the schema also has an end column.
pub fn render_export(
    schema: &FileSchema,
    records: &[RawRecord],
    config: &AdapterConfig,
    tz: &DatasetTz,
) -> String {
    let mut out = schema.header_line();
    out.push('\n');
    for r in records {
        let split = schema.timestamp.render(r.start, tz);
        let (date_part, time_part) = split.split_once(' ').unwrap_or((split.as_str(), ""));
        let span = r.span_seconds().unwrap_or(0).max(0) as u64;
        let row: Vec<String> = schema
            .columns
            .iter()
            .map(|c| match c.role {
                ColumnRole::Start => schema.timestamp.render(r.start, tz),
                ColumnRole::End => schema.timestamp.render(r.end.unwrap_or(r.start), tz),
                ColumnRole::Date => {
                    if schema.day_level {
                        r.start.date().to_string()
                    } else {
                        date_part.to_string()
                    }
                }
                ColumnRole::Time => time_part.to_string(),
                ColumnRole::Value | ColumnRole::Steps => match r.value {
                    Some(Quantity::Int(n)) => n.to_string(),
                    Some(Quantity::Real(x)) => x.to_string(),
                    None => String::new(),
                },
                ColumnRole::DurationMinutes => round_div(span, 60).to_string(),
                ColumnRole::DurationSeconds => span.to_string(),
                ColumnRole::Stage => r
                    .stage
                    .map(|s| stage_token(r.vendor, s, config))
                    .unwrap_or_default(),
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
