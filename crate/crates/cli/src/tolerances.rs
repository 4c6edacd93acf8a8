use finsler_core::classify::Thresholds;
use finsler_core::curvature::{EULER_TOLERANCE, SYMMETRY_TOLERANCE};
use serde::Serialize;

/// Classification thresholds plus the gates of the comparison suites; all settable by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    #[serde(flatten)]
    pub thresholds: Thresholds,
    /// Relative jet-vs-oracle deviation through Landsberg.
    pub oracle: f64,
    /// Same, for `dE/dy` and Douglas.
    pub oracle_douglas: f64,
    /// Max-abs closed-form versus engine block difference.
    pub block: f64,
    pub block_douglas: f64,
    pub identity_symmetry: f64,
    pub identity_euler: f64,
    pub degeneration_pure: f64,
    pub degeneration_mixed: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            oracle: 1e-4,
            oracle_douglas: 1e-3,
            block: 1e-7,
            block_douglas: 1e-6,
            identity_symmetry: SYMMETRY_TOLERANCE,
            identity_euler: EULER_TOLERANCE,
            degeneration_pure: 1e-10,
            degeneration_mixed: 1e-9,
        }
    }
}

impl Tolerances {
    pub const GATES: [&'static str; 8] =
        ["oracle", "oracle_douglas", "block", "block_douglas", "identity_symmetry", "identity_euler", "degeneration_pure", "degeneration_mixed"];

    pub fn names() -> impl Iterator<Item = &'static str> {
        Thresholds::NAMES.into_iter().chain(Self::GATES)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        let slot = match name {
            "oracle" => &mut self.oracle,
            "oracle_douglas" => &mut self.oracle_douglas,
            "block" => &mut self.block,
            "block_douglas" => &mut self.block_douglas,
            "identity_symmetry" => &mut self.identity_symmetry,
            "identity_euler" => &mut self.identity_euler,
            "degeneration_pure" => &mut self.degeneration_pure,
            "degeneration_mixed" => &mut self.degeneration_mixed,
            _ => return self.thresholds.set(name, value).map_err(|e| e.to_string()),
        };
        *slot = value;
        Ok(())
    }

    /// Oracle gate for a compared tensor.
    pub fn oracle_for(&self, tensor: &str) -> f64 {
        if is_douglas_family(tensor) {
            self.oracle_douglas
        } else {
            self.oracle
        }
    }

    /// Block gate for a closed-form family.
    pub fn block_for(&self, family: &str) -> f64 {
        if is_douglas_family(family) {
            self.block_douglas
        } else {
            self.block
        }
    }
}

fn is_douglas_family(name: &str) -> bool {
    matches!(name, "douglas" | "mean_berwald_dy")
}

/// Parses `NAME=VALUE`.
pub fn parse_assignment(text: &str) -> Result<(String, f64), String> {
    let (name, value) = text.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got '{text}'"))?;
    let name = name.trim();
    if !Tolerances::names().any(|n| n == name) {
        return Err(format!("unknown tolerance '{name}'"));
    }
    let v: f64 = value.trim().parse().map_err(|_| format!("tolerance {name}: '{value}' is not a number"))?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(format!("tolerance {name} must be a non-negative number"));
    }
    Ok((name.to_string(), v))
}
