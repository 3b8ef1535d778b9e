//! Numeric checks that do not go through the rewrite rules: brute-force
//! index enumeration and quadrature with nascent delta functions.

mod delta;
mod fields;
mod tensor;

pub use delta::{
    check_delta_flip, check_integration_by_parts, check_ordering_residual, seeded_bumps,
    FlipReport, IbpReport, OrderingResidual, IBP_GRID,
};
pub use fields::random_field_check;
pub use tensor::{enumerate_identity, Counterexample, Enumeration};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Indicator of `|u| <= a/2`, height `1/a`.
    Rectangle,
    /// `exp(-u^2/a^2) / (a sqrt(pi))`.
    Gaussian,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rectangle" => Ok(Family::Rectangle),
            "gaussian" => Ok(Family::Gaussian),
            _ => Err(format!("unknown family `{s}` (rectangle|gaussian)")),
        }
    }
}

/// Even, unit-area approximation of the Dirac delta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedDelta {
    pub family: Family,
    pub a: f64,
}

impl RegularizedDelta {
    pub fn new(family: Family, a: f64) -> Self {
        RegularizedDelta { family, a }
    }

    pub fn value(&self, u: f64) -> f64 {
        let a = self.a;
        match self.family {
            Family::Rectangle => {
                if u.abs() <= a / 2.0 {
                    1.0 / a
                } else {
                    0.0
                }
            }
            Family::Gaussian => (-(u * u) / (a * a)).exp() / (a * std::f64::consts::PI.sqrt()),
        }
    }

    /// Pointwise derivative; zero almost everywhere for the rectangle.
    pub fn derivative(&self, u: f64) -> f64 {
        match self.family {
            Family::Rectangle => 0.0,
            Family::Gaussian => -2.0 * u / (self.a * self.a) * self.value(u),
        }
    }

    /// Closed form of `int delta_a(u)^2 du`.
    pub fn self_overlap(&self) -> f64 {
        match self.family {
            Family::Rectangle => 1.0 / self.a,
            Family::Gaussian => 1.0 / (self.a * (2.0 * std::f64::consts::PI).sqrt()),
        }
    }
}

/// Uniform cell-centred grid on `[-extent/2, extent/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub extent: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(extent: f64, points: usize) -> Self {
        GridSpec { extent, points }
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.points as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.spacing();
        (0..self.points).map(move |k| -self.extent / 2.0 + (k as f64 + 0.5) * h)
    }

    /// The nascent delta must be resolved: `a / h >= 16`.
    pub fn resolves(&self, d: &RegularizedDelta) -> Result<()> {
        let ratio = d.a / self.spacing();
        if ratio < 16.0 {
            return Err(Error::Precondition(format!(
                "grid too coarse: a/h = {ratio:.2} < 16 (a = {}, h = {})",
                d.a,
                self.spacing()
            )));
        }
        Ok(())
    }
}

/// Sum in pairs so the result does not depend on how a loop was split.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}
