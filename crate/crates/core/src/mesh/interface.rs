use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Shape of the folding curve `Γ(y) = [x(y), y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceKind {
    None,
    /// The straight fold `x = 1/2`.
    StraightX05,
    /// `x(y) = 2/3 - 2/3 (y - y^2)`.
    Quadratic,
    /// `x(y) = 2/3 - sin(pi y) / 6`.
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceSpec {
    pub kind: InterfaceKind,
    /// 1: piecewise linear chords through on-curve vertices.
    /// 2: interface edge nodes placed on the curve.
    pub fit_order: u8,
}

impl InterfaceSpec {
    pub const NONE: InterfaceSpec = InterfaceSpec {
        kind: InterfaceKind::None,
        fit_order: 2,
    };

    pub fn new(kind: InterfaceKind, fit_order: u8) -> Self {
        Self { kind, fit_order }
    }

    pub fn is_none(&self) -> bool {
        self.kind == InterfaceKind::None
    }

    /// Horizontal position of the curve at height `y`.
    pub fn curve_x(&self, y: f64) -> Option<f64> {
        match self.kind {
            InterfaceKind::None => None,
            InterfaceKind::StraightX05 => Some(0.5),
            InterfaceKind::Quadratic => Some(2.0 / 3.0 - 2.0 / 3.0 * (y - y * y)),
            InterfaceKind::Sine => Some(2.0 / 3.0 - (PI * y).sin() / 6.0),
        }
    }

    /// `d x / d y` along the curve.
    pub fn curve_dx_dy(&self, y: f64) -> Option<f64> {
        match self.kind {
            InterfaceKind::None => None,
            InterfaceKind::StraightX05 => Some(0.0),
            InterfaceKind::Quadratic => Some(-2.0 / 3.0 * (1.0 - 2.0 * y)),
            InterfaceKind::Sine => Some(-PI * (PI * y).cos() / 6.0),
        }
    }

    /// Mean of `x(y)` over `y in [0, 1]`.
    pub fn mean_x(&self) -> Option<f64> {
        match self.kind {
            InterfaceKind::None => None,
            InterfaceKind::StraightX05 => Some(0.5),
            InterfaceKind::Quadratic => Some(2.0 / 3.0 - 1.0 / 9.0),
            InterfaceKind::Sine => Some(2.0 / 3.0 - 1.0 / (3.0 * PI)),
        }
    }

    /// Whether interface edge nodes are placed on the curve. The quadratic
    /// curve is reproduced exactly by quadratic edges, so it is always fitted.
    pub fn nodes_on_curve(&self) -> bool {
        match self.kind {
            InterfaceKind::None | InterfaceKind::StraightX05 => false,
            InterfaceKind::Quadratic => true,
            InterfaceKind::Sine => self.fit_order >= 2,
        }
    }
}

impl fmt::Display for InterfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InterfaceKind::None => "none",
            InterfaceKind::StraightX05 => "straight",
            InterfaceKind::Quadratic => "quadratic",
            InterfaceKind::Sine => "sine",
        };
        f.write_str(s)
    }
}

impl FromStr for InterfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(InterfaceKind::None),
            "straight" | "straight_x05" => Ok(InterfaceKind::StraightX05),
            "quadratic" => Ok(InterfaceKind::Quadratic),
            "sine" => Ok(InterfaceKind::Sine),
            other => Err(Error::Config(format!("unknown interface kind '{other}'"))),
        }
    }
}
