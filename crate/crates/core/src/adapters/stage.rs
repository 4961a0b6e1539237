use super::AdapterConfig;
use crate::model::{SleepStage, VendorKind};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("unknown {vendor} sleep stage {token:?}")]
pub struct UnknownStage {
    pub vendor: VendorKind,
    pub token: String,
}

/// Resolves a vendor sleep-stage token to one of the four canonical stages.
///
/// Samsung integer codes go through the configured code map; textual tokens
/// match the canonical names or the vendor's synonyms, ignoring case.
pub fn map_sleep_stage(
    vendor: VendorKind,
    token: &str,
    config: &AdapterConfig,
) -> Result<SleepStage, UnknownStage> {
    let token = token.trim();
    let unknown = || UnknownStage {
        vendor,
        token: token.to_string(),
    };
    if token.is_empty() {
        return Err(unknown());
    }
    if vendor == VendorKind::Samsung {
        if let Ok(code) = token.parse::<i64>() {
            return config
                .samsung_sleep_stage_codes
                .get(&code)
                .copied()
                .ok_or_else(unknown);
        }
    }
    let folded = token.to_ascii_lowercase();
    if let Ok(stage) = folded.parse::<SleepStage>() {
        return Ok(stage);
    }
    config
        .stage_synonyms
        .get(&vendor)
        .and_then(|m| m.get(&folded))
        .copied()
        .ok_or_else(unknown)
}

/// Token written back when rendering a record in the vendor's layout.
pub(crate) fn stage_token(vendor: VendorKind, stage: SleepStage, config: &AdapterConfig) -> String {
    if vendor == VendorKind::Samsung {
        if let Some((code, _)) = config
            .samsung_sleep_stage_codes
            .iter()
            .find(|(_, s)| **s == stage)
        {
            return code.to_string();
        }
    }
    stage.as_str().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textual_tokens() {
        let cfg = AdapterConfig::default();
        assert_eq!(
            map_sleep_stage(VendorKind::Fitbit, "deep", &cfg),
            Ok(SleepStage::Deep)
        );
        assert_eq!(
            map_sleep_stage(VendorKind::Apple, "REM", &cfg),
            Ok(SleepStage::Rem)
        );
        assert_eq!(
            map_sleep_stage(VendorKind::Fitbit, "Wake", &cfg),
            Ok(SleepStage::Awake)
        );
        assert_eq!(
            map_sleep_stage(VendorKind::Apple, "AsleepCore", &cfg),
            Ok(SleepStage::Light)
        );
        assert!(map_sleep_stage(VendorKind::Apple, "wake", &cfg).is_err());
        assert!(map_sleep_stage(VendorKind::Apple, "", &cfg).is_err());
    }

    #[test]
    fn samsung_codes_resolve_through_config() {
        let cfg = AdapterConfig::default();
        assert_eq!(
            map_sleep_stage(VendorKind::Samsung, "40003", &cfg),
            Ok(SleepStage::Deep)
        );
        let err = map_sleep_stage(VendorKind::Samsung, "99999", &cfg).unwrap_err();
        assert_eq!(err.token, "99999");
        // integers mean nothing to text-token vendors
        assert!(map_sleep_stage(VendorKind::Fitbit, "40003", &cfg).is_err());
    }

    #[test]
    fn tokens_render_back_to_same_stage() {
        let cfg = AdapterConfig::default();
        for v in VendorKind::ALL {
            for s in SleepStage::ALL {
                assert_eq!(map_sleep_stage(v, &stage_token(v, s, &cfg), &cfg), Ok(s));
            }
        }
    }
}
