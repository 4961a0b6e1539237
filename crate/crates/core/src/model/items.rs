use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Every measurement the pipeline knows about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Steps,
    ActivityDuration,
    ExerciseDuration,
    HeartRate,
    OxygenSaturation,
    SleepDuration,
    SleepStage,
}

impl ItemKind {
    pub const ALL: [ItemKind; 7] = [
        ItemKind::Steps,
        ItemKind::ActivityDuration,
        ItemKind::ExerciseDuration,
        ItemKind::HeartRate,
        ItemKind::OxygenSaturation,
        ItemKind::SleepDuration,
        ItemKind::SleepStage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ItemKind::Steps => "steps",
            ItemKind::ActivityDuration => "activity_duration",
            ItemKind::ExerciseDuration => "exercise_duration",
            ItemKind::HeartRate => "heart_rate",
            ItemKind::OxygenSaturation => "oxygen_saturation",
            ItemKind::SleepDuration => "sleep_duration",
            ItemKind::SleepStage => "sleep_stage",
        }
    }

    /// Point samples are averaged per window; everything else covers a span.
    pub fn is_biometric(self) -> bool {
        matches!(self, ItemKind::HeartRate | ItemKind::OxygenSaturation)
    }

    pub fn is_duration(self) -> bool {
        matches!(
            self,
            ItemKind::ActivityDuration
                | ItemKind::ExerciseDuration
                | ItemKind::SleepDuration
                | ItemKind::SleepStage
        )
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ItemKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ItemKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::UnknownName("item", s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SleepStage {
    Deep,
    Light,
    Rem,
    Awake,
}

impl SleepStage {
    pub const ALL: [SleepStage; 4] = [
        SleepStage::Deep,
        SleepStage::Light,
        SleepStage::Rem,
        SleepStage::Awake,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SleepStage::Deep => "deep",
            SleepStage::Light => "light",
            SleepStage::Rem => "rem",
            SleepStage::Awake => "awake",
        }
    }

    /// Tie-break rank when two stages cover a window equally; lower wins.
    pub fn tie_rank(self) -> u8 {
        match self {
            SleepStage::Deep => 0,
            SleepStage::Rem => 1,
            SleepStage::Light => 2,
            SleepStage::Awake => 3,
        }
    }
}

impl fmt::Display for SleepStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SleepStage {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SleepStage::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::UnknownName("sleep stage", s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VendorKind {
    Samsung,
    Apple,
    Fitbit,
    Xiaomi,
}

impl VendorKind {
    pub const ALL: [VendorKind; 4] = [
        VendorKind::Samsung,
        VendorKind::Apple,
        VendorKind::Fitbit,
        VendorKind::Xiaomi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VendorKind::Samsung => "samsung",
            VendorKind::Apple => "apple",
            VendorKind::Fitbit => "fitbit",
            VendorKind::Xiaomi => "xiaomi",
        }
    }

    /// Items the vendor's companion app exports at all.
    pub fn supported_items(self) -> &'static [ItemKind] {
        use ItemKind::*;
        match self {
            VendorKind::Samsung | VendorKind::Apple => &ItemKind::ALL,
            VendorKind::Fitbit => &[
                Steps,
                ExerciseDuration,
                HeartRate,
                OxygenSaturation,
                SleepDuration,
                SleepStage,
            ],
            VendorKind::Xiaomi => &[
                Steps,
                ExerciseDuration,
                HeartRate,
                SleepDuration,
                SleepStage,
            ],
        }
    }

    pub fn supports(self, item: ItemKind) -> bool {
        self.supported_items().contains(&item)
    }
}

impl fmt::Display for VendorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VendorKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VendorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::UnknownName("vendor", s.to_string()))
    }
}
