use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target for `rho0 = |H| q / n^4`: half the smallest value seen over ten
/// seeds each on the full spaces `F_5^3` and `F_7^3`, rounded down.
/// Reproduce with `gpsat calibrate --seed 20261016 --trials 10`.
pub const CALIBRATED_SIZE: f64 = 0.00302;
/// Targets for `rho1..rho3`: twice the largest values of the same run,
/// rounded up.
pub const CALIBRATED_DEGREE: [f64; 3] = [0.0652, 0.137, 1.24];

/// Explicit values for the constants hidden in the asymptotic statements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionConstants {
    /// Minimum `n / q`.
    pub t: f64,
    /// Rich-plane threshold multiplier: `n_{P \ K} >= tau_b * n / q`.
    pub tau_b: f64,
    /// Heavy-line threshold multiplier: `n_K >= tau_split * n / q^(2/3)`.
    pub tau_split: f64,
    /// Dense case when `|S_4(U)| >= eps_dense * n^4`.
    pub eps_dense: f64,
    /// Multiplier in every sampling probability `min(1, c_samp * n / (q m))`.
    pub c_samp: f64,
    /// Pass requires `rho0 >= c1`.
    pub c1: f64,
    /// Pass requires `rho_i <= c_deg[i - 1]`.
    pub c_deg: [f64; 3],
    /// Maximum number of build attempts.
    pub retries: u32,
}

impl Default for ConstructionConstants {
    fn default() -> Self {
        Self {
            t: 8.0,
            tau_b: 0.25,
            tau_split: 1.0,
            eps_dense: 1e-3,
            c_samp: 0.25,
            c1: CALIBRATED_SIZE,
            c_deg: CALIBRATED_DEGREE,
            retries: 16,
        }
    }
}

impl ConstructionConstants {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t", self.t),
            ("tau_b", self.tau_b),
            ("tau_split", self.tau_split),
            ("c_samp", self.c_samp),
            ("c1", self.c1),
            ("c_deg[0]", self.c_deg[0]),
            ("c_deg[1]", self.c_deg[1]),
            ("c_deg[2]", self.c_deg[2]),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConstant { name, value });
            }
        }
        if !(self.eps_dense > 0.0 && self.eps_dense < 1.0) {
            return Err(Error::InvalidConstant {
                name: "eps_dense",
                value: self.eps_dense,
            });
        }
        if self.retries == 0 {
            return Err(Error::InvalidConstant {
                name: "retries",
                value: 0.0,
            });
        }
        Ok(())
    }
}
