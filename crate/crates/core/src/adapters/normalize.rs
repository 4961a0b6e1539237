use super::{Quantity, RawRecord};
use crate::model::ItemKind;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("invalid {item} value {value}: {reason}")]
pub struct InvalidValue {
    pub item: ItemKind,
    pub value: String,
    pub reason: &'static str,
}

/// Brings a parsed record onto the canonical types: integer values, integer
/// percent SpO2, point semantics for biometrics.
pub fn normalize_unit(record: RawRecord) -> Result<RawRecord, InvalidValue> {
    let mut r = record;
    let invalid = |v: &Quantity, reason| InvalidValue {
        item: r.item,
        value: v.to_string(),
        reason,
    };
    let value = match r.value {
        None => None,
        Some(q) => {
            if q.is_negative() {
                return Err(invalid(&q, "negative"));
            }
            let n = match q {
                Quantity::Int(n) => n,
                Quantity::Real(x) if !x.is_finite() => return Err(invalid(&q, "not finite")),
                // f64::round is half away from zero.
                Quantity::Real(x) => x.round() as i64,
            };
            match r.item {
                ItemKind::OxygenSaturation if n > 100 => {
                    return Err(invalid(&q, "above 100 percent"))
                }
                ItemKind::HeartRate if n == 0 => {
                    return Err(invalid(&q, "heart rate must be positive"))
                }
                ItemKind::HeartRate if n > i64::from(u16::MAX) => {
                    return Err(invalid(&q, "out of range"))
                }
                _ if n > i64::from(u32::MAX) => return Err(invalid(&q, "out of range")),
                _ => {}
            }
            Some(Quantity::Int(n))
        }
    };
    r.value = value;
    if r.item.is_biometric() {
        r.end = None;
        if r.value.is_none() {
            return Err(InvalidValue {
                item: r.item,
                value: String::new(),
                reason: "missing",
            });
        }
    }
    Ok(r)
}
