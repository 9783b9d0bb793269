//! Instance families for sweeps.

use std::fmt;
use std::str::FromStr;

use qbai::{BanditInstance, Result};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Every suboptimal arm sits `Δ₂` below the best.
    UniformGap,
    /// Gaps `Δ₂·γ^{i−2}` for `i = 2..n`.
    GeometricGap { gamma: f64 },
    /// Half the suboptimal arms at gap `Δ₂`, the rest far below.
    TwoCluster,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::UniformGap => "uniform-gap",
            Family::GeometricGap { .. } => "geometric-gap",
            Family::TwoCluster => "two-cluster",
        }
    }

    /// The `n`-armed member with second gap `delta2`. Arm 1 is the best.
    pub fn instance(&self, n: usize, delta2: f64) -> Result<BanditInstance> {
        if n == 0 || !(delta2 > 0.0 && delta2 < 0.5) {
            return Err(qbai::Error::InvalidParameter(format!(
                "family member needs n >= 1 and delta2 in (0, 1/2), got n={n} delta2={delta2}"
            )));
        }
        let p = match *self {
            Family::UniformGap => {
                let mut p = vec![0.5 - delta2 / 2.0; n];
                p[0] = 0.5 + delta2 / 2.0;
                p
            }
            Family::GeometricGap { gamma } => {
                let top = 0.5 + delta2 / 2.0;
                let mut p = vec![top];
                for i in 2..=n {
                    p.push((top - delta2 * gamma.powi(i as i32 - 2)).max(0.01));
                }
                p
            }
            Family::TwoCluster => {
                let top = 0.5 + delta2 / 2.0;
                let near = (n - 1).div_ceil(2);
                let mut p = vec![top];
                p.extend(std::iter::repeat_n(top - delta2, near));
                p.extend(std::iter::repeat_n(0.1, n - 1 - near));
                p
            }
        };
        BanditInstance::new(p)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = CliError;

    fn from_str(s: &str) -> std::result::Result<Self, CliError> {
        match s {
            "uniform-gap" => Ok(Family::UniformGap),
            "geometric-gap" => Ok(Family::GeometricGap { gamma: 2.0 }),
            "two-cluster" => Ok(Family::TwoCluster),
            other => Err(CliError::Usage(format!(
                "unknown family '{other}' (expected uniform-gap, geometric-gap or two-cluster)"
            ))),
        }
    }
}
