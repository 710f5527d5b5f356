//! Physical parameters of the battery/reservoir system and the constants
//! derived from them.
//!
//! Everything is expressed in natural units: hbar = k_B = m = omega_0 = 1.
//! Energies are therefore reported in units of hbar*omega_0, times in units
//! of 1/omega_0 and temperatures in units of hbar*omega_0/k_B.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coupling weights, either an explicit list or the uniform choice
/// alpha_l = 1 for every cell.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Alphas {
    /// The keyword `"uniform"` expands to all ones.
    Keyword(String),
    /// One weight per cell.
    List(Vec<f64>),
}

/// All physical inputs of a run, in natural units.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SystemConfig {
    /// Number of oscillator cells N.
    pub n_cells: usize,
    /// Coupling weights alpha_l, dimensionless.
    #[serde(default = "default_alphas")]
    pub alphas: Alphas,
    /// Damping strength gamma_0 (units omega_0).
    pub gamma0: f64,
    /// Drude cutoff omega_D (units omega_0).
    pub omega_d: f64,
    /// Reservoir temperature T (units hbar*omega_0/k_B).
    #[serde(rename = "T")]
    pub temp_reservoir: f64,
    /// Initial battery temperature T_0 (units hbar*omega_0/k_B).
    #[serde(rename = "T0")]
    pub temp_battery: f64,
}

fn default_alphas() -> Alphas {
    Alphas::Keyword("uniform".to_string())
}

impl SystemConfig {
    /// Build a configuration with uniform couplings alpha_l = 1.
    pub fn uniform(n_cells: usize, gamma0: f64, omega_d: f64, t: f64, t0: f64) -> Result<Self> {
        let cfg = SystemConfig {
            n_cells,
            alphas: default_alphas(),
            gamma0,
            omega_d,
            temp_reservoir: t,
            temp_battery: t0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Build a configuration with explicit coupling weights.
    pub fn with_alphas(
        alphas: Vec<f64>,
        gamma0: f64,
        omega_d: f64,
        t: f64,
        t0: f64,
    ) -> Result<Self> {
        let cfg = SystemConfig {
            n_cells: alphas.len(),
            alphas: Alphas::List(alphas),
            gamma0,
            omega_d,
            temp_reservoir: t,
            temp_battery: t0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Expanded coupling weights, one per cell.
    pub fn alpha_values(&self) -> Vec<f64> {
        match &self.alphas {
            Alphas::Keyword(_) => vec![1.0; self.n_cells],
            Alphas::List(v) => v.clone(),
        }
    }

    /// Check every invariant, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, message: impl Into<String>) -> Error {
            Error::Validation {
                field,
                message: message.into(),
            }
        }
        if self.n_cells == 0 {
            return Err(bad("n_cells", "N must be >= 1"));
        }
        match &self.alphas {
            Alphas::Keyword(k) if k == "uniform" => {}
            Alphas::Keyword(k) => {
                return Err(bad("alphas", format!("unknown keyword `{k}`, expected \"uniform\"")))
            }
            Alphas::List(v) => {
                if v.len() != self.n_cells {
                    return Err(bad(
                        "alphas",
                        format!("expected {} weights, got {}", self.n_cells, v.len()),
                    ));
                }
                if v.iter().any(|a| !a.is_finite()) {
                    return Err(bad("alphas", "all weights must be finite"));
                }
                if v.iter().all(|a| *a == 0.0) {
                    return Err(bad("alphas", "weights must not all be zero"));
                }
            }
        }
        if !(self.gamma0.is_finite() && self.gamma0 > 0.0) {
            return Err(bad("gamma0", format!("must be finite and > 0, got {}", self.gamma0)));
        }
        if !(self.omega_d.is_finite() && self.omega_d > 0.0) {
            return Err(bad("omega_d", format!("must be finite and > 0, got {}", self.omega_d)));
        }
        if !(self.temp_reservoir.is_finite() && self.temp_reservoir >= 0.0) {
            return Err(bad("T", format!("must be finite and >= 0, got {}", self.temp_reservoir)));
        }
        if !(self.temp_battery.is_finite() && self.temp_battery >= 0.0) {
            return Err(bad("T0", format!("must be finite and >= 0, got {}", self.temp_battery)));
        }
        Ok(())
    }
}

/// Constant quantities derived once per configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Global interaction weight: alpha_bar = sqrt(sum alpha_l^2).
    pub alpha_bar: f64,
    /// alpha_bar^2, cached because it appears in nearly every formula.
    pub alpha_bar_sq: f64,
    /// Omega_0 = sqrt(gamma0 * omega_D).
    pub omega0_coupling: f64,
    /// Characteristic frequency Omega_N = alpha_bar * Omega_0.
    pub omega_n: f64,
    /// Charging time scale tau = pi / Omega_N.
    pub tau: f64,
    /// Thermal prefactor C(T0) = coth(1/(2 T0)), with C(0) = 1.
    pub c_t0: f64,
}

/// coth(1/(2*t0)) evaluated in a numerically stable form.
///
/// For t0 -> 0 the argument diverges and coth -> 1 exactly; for large t0
/// the small-argument series 2*t0 + 1/(6*t0) avoids 1/tanh(eps) noise.
pub fn thermal_coth(t0: f64) -> f64 {
    if t0 < 1e-8 {
        1.0
    } else if t0 > 1e8 {
        2.0 * t0 + 1.0 / (6.0 * t0)
    } else {
        1.0 / (0.5 / t0).tanh()
    }
}

/// Compute every derived constant for a validated configuration.
pub fn derive_constants(cfg: &SystemConfig) -> Result<DerivedConstants> {
    cfg.validate()?;
    let alpha_bar_sq: f64 = cfg.alpha_values().iter().map(|a| a * a).sum();
    let alpha_bar = alpha_bar_sq.sqrt();
    let omega0_coupling = (cfg.gamma0 * cfg.omega_d).sqrt();
    let omega_n = alpha_bar * omega0_coupling;
    DerivedConstants {
        alpha_bar,
        alpha_bar_sq,
        omega0_coupling,
        omega_n,
        tau: std::f64::consts::PI / omega_n,
        c_t0: thermal_coth(cfg.temp_battery),
    }
    .checked()
}

impl DerivedConstants {
    fn checked(self) -> Result<Self> {
        if !(self.alpha_bar > 0.0 && self.alpha_bar.is_finite()) {
            return Err(Error::Validation {
                field: "alphas",
                message: format!("alpha_bar = {} must be finite and > 0", self.alpha_bar),
            });
        }
        debug_assert!(self.c_t0 >= 1.0);
        debug_assert!(self.tau > 0.0);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig1_config() -> SystemConfig {
        SystemConfig::uniform(6, 5.0, 2.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn uniform_alpha_bar() {
        let dc = derive_constants(&fig1_config()).unwrap();
        assert_relative_eq!(dc.alpha_bar, 6.0_f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn characteristic_frequency_and_tau() {
        let dc = derive_constants(&fig1_config()).unwrap();
        assert_relative_eq!(dc.omega_n, 60.0_f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(dc.tau, std::f64::consts::PI / 60.0_f64.sqrt(), max_relative = 1e-15);
        assert!((dc.tau - 0.4056).abs() < 5e-4);
    }

    #[test]
    fn zero_temperature_coth_is_one() {
        assert_eq!(thermal_coth(0.0), 1.0);
        let cfg = SystemConfig::uniform(6, 5.0, 2.0, 0.5, 0.0).unwrap();
        assert_eq!(derive_constants(&cfg).unwrap().c_t0, 1.0);
    }

    #[test]
    fn coth_monotone_and_floored() {
        let mut prev = 0.0;
        for &t0 in &[0.0, 1e-9, 0.01, 0.1, 0.5, 1.0, 5.0, 100.0, 1e9] {
            let c = thermal_coth(t0);
            assert!(c >= 1.0, "C({t0}) = {c} < 1");
            assert!(c >= prev, "C not monotone at T0 = {t0}");
            prev = c;
        }
        // High-temperature series agrees with the classical limit 2*T0.
        assert_relative_eq!(thermal_coth(1e9), 2e9, max_relative = 1e-9);
    }

    #[test]
    fn alpha_bar_permutation_invariant() {
        let a = SystemConfig::with_alphas(vec![0.3, 1.2, -0.7, 2.0], 1.0, 1.0, 0.0, 0.0).unwrap();
        let b = SystemConfig::with_alphas(vec![2.0, -0.7, 0.3, 1.2], 1.0, 1.0, 0.0, 0.0).unwrap();
        let da = derive_constants(&a).unwrap();
        let db = derive_constants(&b).unwrap();
        assert_eq!(da.alpha_bar, db.alpha_bar);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SystemConfig::uniform(0, 5.0, 2.0, 0.5, 0.5).is_err());
        assert!(SystemConfig::uniform(6, 0.0, 2.0, 0.5, 0.5).is_err());
        assert!(SystemConfig::uniform(6, 5.0, -2.0, 0.5, 0.5).is_err());
        assert!(SystemConfig::uniform(6, 5.0, 2.0, -0.1, 0.5).is_err());
        assert!(SystemConfig::uniform(6, 5.0, 2.0, 0.5, f64::NAN).is_err());
        assert!(SystemConfig::with_alphas(vec![0.0, 0.0], 5.0, 2.0, 0.5, 0.5).is_err());
        let err = SystemConfig::uniform(6, f64::INFINITY, 2.0, 0.5, 0.5).unwrap_err();
        assert!(err.to_string().contains("gamma0"));
    }

    #[test]
    fn json_round_trip_with_uniform_keyword() {
        let json = r#"{"n_cells":6,"alphas":"uniform","gamma0":5.0,"omega_d":2.0,"T":0.5,"T0":1.0}"#;
        let cfg: SystemConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.alpha_values(), vec![1.0; 6]);
        let explicit = r#"{"n_cells":2,"alphas":[1.0,0.5],"gamma0":1.0,"omega_d":1.0,"T":0.0,"T0":0.0}"#;
        let cfg: SystemConfig = serde_json::from_str(explicit).unwrap();
        assert_eq!(cfg.alpha_values(), vec![1.0, 0.5]);
    }
}
