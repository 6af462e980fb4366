//! Integer code tables shared by every mask layer.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Structural component classes of the component segmentation layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum ComponentClass {
    Background = 0,
    Wall = 1,
    Beam = 2,
    Column = 3,
    WindowFrame = 4,
    WindowPane = 5,
    Balcony = 6,
    Slab = 7,
}

impl ComponentClass {
    pub const ALL: [ComponentClass; 8] = [
        ComponentClass::Background,
        ComponentClass::Wall,
        ComponentClass::Beam,
        ComponentClass::Column,
        ComponentClass::WindowFrame,
        ComponentClass::WindowPane,
        ComponentClass::Balcony,
        ComponentClass::Slab,
    ];

    /// The seven structural classes, without background.
    pub const STRUCTURAL: [ComponentClass; 7] = [
        ComponentClass::Wall,
        ComponentClass::Beam,
        ComponentClass::Column,
        ComponentClass::WindowFrame,
        ComponentClass::WindowPane,
        ComponentClass::Balcony,
        ComponentClass::Slab,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ComponentClass::Background => "background",
            ComponentClass::Wall => "wall",
            ComponentClass::Beam => "beam",
            ComponentClass::Column => "column",
            ComponentClass::WindowFrame => "window_frame",
            ComponentClass::WindowPane => "window_pane",
            ComponentClass::Balcony => "balcony",
            ComponentClass::Slab => "slab",
        }
    }
}

/// Defect classes. Each one lives in its own binary layer because labels of
/// different defects may overlap on the same pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum DefectClass {
    Cracking = 1,
    Spalling = 2,
    #[serde(rename = "rebar")]
    ExposedRebar = 3,
}

impl DefectClass {
    pub const ALL: [DefectClass; 3] = [
        DefectClass::Cracking,
        DefectClass::Spalling,
        DefectClass::ExposedRebar,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(DefectClass::Cracking),
            2 => Some(DefectClass::Spalling),
            3 => Some(DefectClass::ExposedRebar),
            _ => None,
        }
    }

    /// Layer name used in manifests, adapter directories and reports.
    pub fn name(self) -> &'static str {
        match self {
            DefectClass::Cracking => "cracking",
            DefectClass::Spalling => "spalling",
            DefectClass::ExposedRebar => "rebar",
        }
    }

    /// Position in [`DefectClass::ALL`].
    pub fn index(self) -> usize {
        self as usize - 1
    }

    /// The three unordered defect pairs, each with the lower code first.
    pub fn pairs() -> [(DefectClass, DefectClass); 3] {
        [
            (DefectClass::Cracking, DefectClass::Spalling),
            (DefectClass::Cracking, DefectClass::ExposedRebar),
            (DefectClass::Spalling, DefectClass::ExposedRebar),
        ]
    }
}

/// Ordinal damage state of a component. The derived ordering is severity,
/// which is what every tie-break in the crate relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum DamageState {
    NoDamage = 0,
    Light = 1,
    Moderate = 2,
    Severe = 3,
}

impl DamageState {
    pub const ALL: [DamageState; 4] = [
        DamageState::NoDamage,
        DamageState::Light,
        DamageState::Moderate,
        DamageState::Severe,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            DamageState::NoDamage => "no_damage",
            DamageState::Light => "light",
            DamageState::Moderate => "moderate",
            DamageState::Severe => "severe",
        }
    }

    /// Picks the state with the highest count; equal counts go to the more
    /// severe state. Returns `None` when every count is zero.
    pub fn majority(counts: &[u64; 4]) -> Option<DamageState> {
        let mut best: Option<(u64, DamageState)> = None;
        for state in Self::ALL {
            let c = counts[state as usize];
            if c == 0 {
                continue;
            }
            match best {
                Some((bc, _)) if c < bc => {}
                _ => best = Some((c, state)),
            }
        }
        best.map(|(_, s)| s)
    }
}

macro_rules! name_impls {
    ($ty:ty) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|c| c.name() == s)
                    .ok_or_else(|| Error::UnknownClass(s.to_string()))
            }
        }
    };
}

name_impls!(ComponentClass);
name_impls!(DefectClass);
name_impls!(DamageState);

/// The code table a [`MaskLayer`](crate::MaskLayer) is declared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeTable {
    /// 0 = background, 1..=7 = [`ComponentClass`].
    Components,
    /// 0 = absent, 1 = present. Foreground and per-defect layers.
    Binary,
    /// 0..=3 = [`DamageState`].
    Damage,
}

impl CodeTable {
    pub fn max_code(self) -> u8 {
        match self {
            CodeTable::Components => 7,
            CodeTable::Binary => 1,
            CodeTable::Damage => 3,
        }
    }

    pub fn num_classes(self) -> usize {
        self.max_code() as usize + 1
    }

    pub fn contains(self, code: u8) -> bool {
        code <= self.max_code()
    }

    pub fn name(self) -> &'static str {
        match self {
            CodeTable::Components => "components",
            CodeTable::Binary => "binary",
            CodeTable::Damage => "damage",
        }
    }

    pub fn class_name(self, code: u8) -> String {
        match self {
            CodeTable::Components => ComponentClass::from_code(code)
                .map(|c| c.name().to_string())
                .unwrap_or_else(|| format!("code_{code}")),
            CodeTable::Damage => DamageState::from_code(code)
                .map(|c| c.name().to_string())
                .unwrap_or_else(|| format!("code_{code}")),
            CodeTable::Binary => match code {
                0 => "background".to_string(),
                1 => "positive".to_string(),
                _ => format!("code_{code}"),
            },
        }
    }
}
