//! Window-level aggregation primitives: splitting span quantities across
//! windows, summing short records, averaging biometric samples and picking
//! a window's sleep stage.

use std::collections::BTreeMap;

use super::IntegrationError;
use crate::adapters::RawRecord;
use crate::model::{round_div, ItemKind, LocalTimestamp, SleepStage, VendorKind};

/// Share of one record's quantity landing in one window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Allocation {
    pub window_start: LocalTimestamp,
    pub item: ItemKind,
    /// Steps for [`ItemKind::Steps`], seconds for duration items.
    pub amount: u64,
    pub vendor: VendorKind,
    /// Index of the originating record in the integrated input.
    pub origin: usize,
}

/// Integer apportionment of `total` proportionally to `weights`.
///
/// Each share is the floor of its exact quota; the units left over go to
/// the largest fractional remainders, earlier positions first on ties. The
/// shares always sum to `total`.
pub fn largest_remainder(total: u64, weights: &[u64]) -> Vec<u64> {
    let sum: u128 = weights.iter().map(|w| u128::from(*w)).sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let total = u128::from(total);
    let mut shares = Vec::with_capacity(weights.len());
    let mut remainders = Vec::with_capacity(weights.len());
    for (i, w) in weights.iter().enumerate() {
        let exact = total * u128::from(*w);
        shares.push((exact / sum) as u64);
        remainders.push((exact % sum, i));
    }
    let assigned: u128 = shares.iter().map(|s| u128::from(*s)).sum();
    let leftover = (total - assigned) as usize;
    if leftover > 0 {
        remainders.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in &remainders[..leftover] {
            shares[i] += 1;
        }
    }
    shares
}

fn check_partition(
    record: &RawRecord,
    decomposition: &[(LocalTimestamp, u32)],
    interval_seconds: i64,
) -> Result<(), IntegrationError> {
    let inconsistent = |why: &str| {
        Err(IntegrationError::InternalConsistency(format!(
            "{}: {why}",
            record.source
        )))
    };
    let Some(span) = record.span_seconds() else {
        return inconsistent("record has no span");
    };
    let Some(first) = decomposition.first() else {
        return inconsistent("empty decomposition");
    };
    let covered: i64 = decomposition.iter().map(|(_, s)| i64::from(*s)).sum();
    if covered != span {
        return inconsistent("overlaps do not sum to the span length");
    }
    if record.start < first.0 || record.start.seconds() >= first.0.seconds() + interval_seconds {
        return inconsistent("first window does not contain the span start");
    }
    if decomposition
        .windows(2)
        .any(|w| w[1].0.seconds() - w[0].0.seconds() != interval_seconds)
    {
        return inconsistent("windows are not consecutive");
    }
    Ok(())
}

/// Splits one span record over the windows it overlaps.
///
/// Step counts are apportioned by overlap with [`largest_remainder`];
/// duration items allocate their overlap seconds as-is. An exercise record
/// carrying a step count yields step allocations as well.
pub fn allocate_span_quantity(
    record: &RawRecord,
    origin: usize,
    decomposition: &[(LocalTimestamp, u32)],
    interval_seconds: i64,
) -> Result<Vec<Allocation>, IntegrationError> {
    check_partition(record, decomposition, interval_seconds)?;
    let mut out = Vec::with_capacity(decomposition.len() * 2);
    let alloc = |window_start, item, amount| Allocation {
        window_start,
        item,
        amount,
        vendor: record.vendor,
        origin,
    };
    let steps = match record.item {
        ItemKind::Steps | ItemKind::ExerciseDuration => record
            .value
            .map(|q| {
                q.as_int()
                    .filter(|n| *n >= 0)
                    .ok_or_else(|| IntegrationError::invalid(record, "step count not normalized"))
            })
            .transpose()?,
        _ => None,
    };
    if record.item.is_duration() {
        out.extend(
            decomposition
                .iter()
                .map(|(w, secs)| alloc(*w, record.item, u64::from(*secs))),
        );
    }
    if let Some(total) = steps {
        let weights: Vec<u64> = decomposition.iter().map(|(_, s)| u64::from(*s)).collect();
        let shares = largest_remainder(total as u64, &weights);
        out.extend(
            decomposition
                .iter()
                .zip(shares)
                .map(|((w, _), n)| alloc(*w, ItemKind::Steps, n)),
        );
    } else if record.item == ItemKind::Steps {
        return Err(IntegrationError::invalid(
            record,
            "step record without a count",
        ));
    }
    Ok(out)
}

/// Converts one record's per-window seconds to whole minutes so that the
/// record's minutes add up to its rounded total duration.
pub fn seconds_to_minutes(seconds: &[u64]) -> Vec<u64> {
    let total: u64 = seconds.iter().sum();
    largest_remainder(round_div(total, 60), seconds)
}

/// Sum of same-window, same-item, same-vendor allocations.
pub fn sum_short_records(allocations: &[Allocation]) -> Result<u64, IntegrationError> {
    if let Some(first) = allocations.first() {
        if allocations.iter().any(|a| {
            a.window_start != first.window_start || a.item != first.item || a.vendor != first.vendor
        }) {
            return Err(IntegrationError::InternalConsistency(
                "summing allocations from different windows, items or vendors".into(),
            ));
        }
    }
    Ok(allocations.iter().map(|a| a.amount).sum())
}

/// Arithmetic mean of point samples rounded half away from zero, with the
/// sample count. `None` for no samples.
pub fn average_biometric(samples: &[u32]) -> Option<(u32, u32)> {
    if samples.is_empty() {
        return None;
    }
    let sum: u64 = samples.iter().map(|s| u64::from(*s)).sum();
    let n = samples.len() as u64;
    Some((round_div(sum, n) as u32, n as u32))
}

/// Stage with the most seconds in a window (ties: deep, rem, light, awake)
/// and the window's total staged seconds, awake included.
pub fn dominant_sleep_stage(
    stage_seconds: &BTreeMap<SleepStage, u64>,
) -> Option<(SleepStage, u64)> {
    let total: u64 = stage_seconds.values().sum();
    stage_seconds
        .iter()
        .filter(|(_, s)| **s > 0)
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.tie_rank().cmp(&a.0.tie_rank())))
        .map(|(stage, _)| (*stage, total))
}
