use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assembly::{Penalty, PenaltyLength};
use crate::error::{Error, Result};
use crate::mesh::{InterfaceKind, InterfaceSpec};
use crate::solver::Method;

/// Boundary data scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcCase {
    /// `u = 0`, `∇u = 0` on all of `∂Ω`.
    ClampedAll,
    /// `u = 0` and `∇u` equal to the outward unit normal on `x = 0` and `x = 1`.
    ClampedTwoSidesGrad,
    /// `u = 0.3` on `x = 0`, `u = 0` on `x = 1`, `∇u = 0` on both.
    ClampedTwoSidesLift,
    /// `u = 0`, `∇u = 0` on `{x >= 2/3} ∩ ∂Ω` and `u(0, 1/2) = 0.3`.
    ClampedRightPoint,
}

impl BcCase {
    const NAMES: [(&'static str, BcCase); 4] = [
        ("clamped_all", BcCase::ClampedAll),
        ("clamped_two_sides_grad", BcCase::ClampedTwoSidesGrad),
        ("clamped_two_sides_lift", BcCase::ClampedTwoSidesLift),
        ("clamped_right_point", BcCase::ClampedRightPoint),
    ];

    /// Whether `g = Φ = 0` and no point value is prescribed.
    pub fn is_homogeneous(self) -> bool {
        self == BcCase::ClampedAll
    }
}

impl fmt::Display for BcCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = Self::NAMES.iter().find(|(_, c)| c == self).unwrap().0;
        f.write_str(name)
    }
}

impl FromStr for BcCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::NAMES
            .iter()
            .find(|(n, _)| *n == s)
            .map(|&(_, c)| c)
            .ok_or_else(|| Error::Config(format!("unknown boundary case '{s}'")))
    }
}

/// Body force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Load {
    Zero,
    Constant(f64),
    /// `Δ²u*` for `u* = x²(1-x)² y²(1-y)²`.
    Manufactured,
}

impl fmt::Display for Load {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Load::Zero => f.write_str("zero"),
            Load::Constant(c) => write!(f, "{c}"),
            Load::Manufactured => f.write_str("manufactured"),
        }
    }
}

impl FromStr for Load {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Load::Zero),
            "manufactured" => Ok(Load::Manufactured),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|c| c.is_finite())
                .map(|c| if c == 0.0 { Load::Zero } else { Load::Constant(c) })
                .ok_or_else(|| Error::Config(format!("invalid load '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outputs {
    pub csv: bool,
    pub vtk: bool,
    pub energy: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            csv: true,
            vtk: true,
            energy: true,
        }
    }
}

impl FromStr for Outputs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Outputs {
            csv: false,
            vtk: false,
            energy: false,
        };
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            match item {
                "csv" => out.csv = true,
                "vtk" => out.vtk = true,
                "energy" => out.energy = true,
                "none" => {}
                _ => return Err(Error::Config(format!("unknown output '{item}'"))),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Outputs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<&str> = [(self.csv, "csv"), (self.vtk, "vtk"), (self.energy, "energy")]
            .into_iter()
            .filter_map(|(on, n)| on.then_some(n))
            .collect();
        if items.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&items.join(","))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub degree: usize,
    pub penalty: Penalty,
    pub interface: InterfaceSpec,
    pub bc: BcCase,
    pub load: Load,
    pub levels: usize,
    /// Grid subdivisions of the level-0 mesh.
    pub base_n: usize,
    pub solver: Method,
    pub outputs: Outputs,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "run".into(),
            degree: 2,
            penalty: Penalty::default(),
            interface: InterfaceSpec::NONE,
            bc: BcCase::ClampedAll,
            load: Load::Constant(100.0),
            levels: 3,
            base_n: 4,
            solver: Method::Auto,
            outputs: Outputs::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 13] = [
        "name",
        "k",
        "gamma",
        "gamma0",
        "gamma1",
        "penalty_length",
        "interface",
        "fit_order",
        "bc",
        "load",
        "levels",
        "base_n",
        "solver",
    ];

    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "name" => {
                if value.is_empty() || value.contains(['/', '\\']) || value == "." || value == ".." {
                    return Err(Error::Config(format!("invalid run name '{value}'")));
                }
                self.name = value.to_string();
            }
            "k" => self.degree = parse(key, value)?,
            "gamma" => {
                let g = parse(key, value)?;
                self.penalty.gamma0 = g;
                self.penalty.gamma1 = g;
            }
            "gamma0" => self.penalty.gamma0 = parse(key, value)?,
            "gamma1" => self.penalty.gamma1 = parse(key, value)?,
            "penalty_length" => self.penalty.length = value.parse::<PenaltyLength>()?,
            "interface" => self.interface.kind = value.parse::<InterfaceKind>()?,
            "fit_order" => self.interface.fit_order = parse(key, value)?,
            "bc" => self.bc = value.parse()?,
            "load" | "f" => self.load = value.parse()?,
            "levels" => self.levels = parse(key, value)?,
            "base_n" => self.base_n = parse(key, value)?,
            "solver" => self.solver = value.parse()?,
            "outputs" => self.outputs = value.parse()?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key=value` string such as a command-line override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{pair}'")))?;
        self.set(k, v)
    }

    /// Parses a plain-text config: one `key = value` per line, `#` starts a
    /// comment. A `preset = NAME` line (first) starts from that preset.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            if k.trim() == "preset" {
                let name = cfg.name.clone();
                cfg = preset(v.trim())?;
                if name != Self::default().name {
                    cfg.name = name;
                }
                continue;
            }
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes to the plain-text format accepted by [`Self::parse_str`].
    pub fn to_text(&self) -> String {
        let kind = self.interface.kind.to_string();
        [
            ("name", self.name.clone()),
            ("k", self.degree.to_string()),
            ("gamma0", self.penalty.gamma0.to_string()),
            ("gamma1", self.penalty.gamma1.to_string()),
            ("penalty_length", self.penalty.length.to_string()),
            ("interface", kind),
            ("fit_order", self.interface.fit_order.to_string()),
            ("bc", self.bc.to_string()),
            ("load", self.load.to_string()),
            ("levels", self.levels.to_string()),
            ("base_n", self.base_n.to_string()),
            ("solver", self.solver.to_string()),
            ("outputs", self.outputs.to_string()),
        ]
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(2..=3).contains(&self.degree) {
            return bad(format!("k must be 2 or 3, got {}", self.degree));
        }
        if !(self.penalty.gamma0 > 0.0 && self.penalty.gamma1 > 0.0) {
            return bad("gamma0 and gamma1 must be positive".into());
        }
        if !(1..=2).contains(&self.interface.fit_order) {
            return bad(format!("fit_order must be 1 or 2, got {}", self.interface.fit_order));
        }
        if self.levels < 3 {
            return bad(format!("levels must be at least 3, got {}", self.levels));
        }
        if self.base_n < 2 || self.base_n % 2 != 0 {
            return bad(format!("base_n must be even and at least 2, got {}", self.base_n));
        }
        if self.interface.nodes_on_curve() && self.base_n < 4 {
            return bad("a curved fold needs base_n >= 4".into());
        }
        if self.bc == BcCase::ClampedRightPoint && self.interface.is_none() {
            return bad("bc clamped_right_point requires a fold".into());
        }
        if self.load == Load::Manufactured && self.bc != BcCase::ClampedAll {
            return bad("the manufactured load requires bc = clamped_all".into());
        }
        Ok(())
    }
}

/// Builtin experiment names.
pub const PRESETS: [&str; 11] = [
    "table1-nofold",
    "table1-straight",
    "table1-pwlinear",
    "table1-pwquad",
    "fig2-nofold",
    "fig2-fold",
    "fig3-nofold",
    "fig3-fold",
    "fig4-nofold",
    "fig4-fold",
    "fig5-fold",
];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let quadratic = InterfaceSpec::new(InterfaceKind::Quadratic, 2);
    let table = |interface| ExperimentConfig {
        name: name.to_string(),
        interface,
        levels: 6,
        outputs: Outputs {
            csv: true,
            vtk: false,
            energy: false,
        },
        ..ExperimentConfig::default()
    };
    let figure = |interface, bc, load| ExperimentConfig {
        name: name.to_string(),
        interface,
        bc,
        load,
        levels: 3,
        ..ExperimentConfig::default()
    };
    let cfg = match name {
        "table1-nofold" => table(InterfaceSpec::NONE),
        "table1-straight" => table(InterfaceSpec::new(InterfaceKind::StraightX05, 2)),
        "table1-pwlinear" => table(InterfaceSpec::new(InterfaceKind::Sine, 1)),
        "table1-pwquad" => table(InterfaceSpec::new(InterfaceKind::Sine, 2)),
        "fig2-nofold" => figure(InterfaceSpec::NONE, BcCase::ClampedAll, Load::Constant(100.0)),
        "fig2-fold" => figure(quadratic, BcCase::ClampedAll, Load::Constant(100.0)),
        "fig3-nofold" => figure(InterfaceSpec::NONE, BcCase::ClampedTwoSidesGrad, Load::Zero),
        "fig3-fold" => figure(quadratic, BcCase::ClampedTwoSidesGrad, Load::Zero),
        "fig4-nofold" => figure(InterfaceSpec::NONE, BcCase::ClampedTwoSidesLift, Load::Zero),
        "fig4-fold" => figure(quadratic, BcCase::ClampedTwoSidesLift, Load::Zero),
        "fig5-fold" => figure(quadratic, BcCase::ClampedRightPoint, Load::Zero),
        _ => {
            return Err(Error::Config(format!(
                "unknown preset '{name}' (available: {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.name, name);
            assert_eq!(cfg.degree, 2);
            assert_eq!(cfg.penalty, Penalty::new(10.0, 10.0));
        }
        assert!(preset("table2").is_err());
    }

    #[test]
    fn text_round_trip() {
        let cfg = preset("fig5-fold").unwrap();
        let back = ExperimentConfig::parse_str(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn parse_with_comments_and_overrides() {
        let text = "# sweep\npreset = table1-pwquad\nlevels = 4  # shorter\nsolver = direct\n";
        let mut cfg = ExperimentConfig::parse_str(text).unwrap();
        assert_eq!(cfg.levels, 4);
        assert_eq!(cfg.interface, InterfaceSpec::new(InterfaceKind::Sine, 2));
        cfg.set_pair("gamma=20").unwrap();
        assert_eq!(cfg.penalty.gamma0, 20.0);
        assert_eq!(cfg.penalty.gamma1, 20.0);
        cfg.set_pair("load=0").unwrap();
        assert_eq!(cfg.load, Load::Zero);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse_str("levels 3").is_err());
        assert!(ExperimentConfig::parse_str("colour = red").is_err());
        assert!(ExperimentConfig::parse_str("k = 5").is_err());
        assert!(ExperimentConfig::parse_str("levels = 2").is_err());
        assert!(ExperimentConfig::parse_str("bc = clamped_right_point").is_err());
        assert!(ExperimentConfig::parse_str("name = ../x").is_err());
        assert!(ExperimentConfig::parse_str("interface = sine\nbase_n = 2").is_err());
        let err = ExperimentConfig::parse_str("gamma0 = -1").unwrap_err();
        assert!(err.is_config_error());
    }
}
