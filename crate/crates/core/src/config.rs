//! Cloaking scenario description shared by all solvers.

use serde::{Deserialize, Serialize};

use crate::error::{CloakError, Result};

/// Which cloaking scheme is simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Variant {
    /// Transformation cloak on `B_2 \ B_1`, lossy layer `(I, 1 + i/omega)`
    /// on `B_1 \ B_{1/2}`, object in `B_{1/2}`.
    FixedLossy,
    /// As `FixedLossy` but the lossy layer is the pushforward of
    /// `1 + i/(omega rho lambda)` with `lambda = rho^(1 + gamma)`.
    RhoLossy { gamma: f64 },
    /// Transformation cloak only, object fills `B_1`.
    NoLoss,
    /// `FixedLossy` with the Drude-Lorentz term added to the cloak scalar.
    /// `omega_c` defaults to `rho^(-d/2)`.
    DrudeLorentz { sigma_n: f64, sigma_d: f64, omega_c: Option<f64> },
    /// Maxwell cloak without lossy layer, object fills `B_1`.
    MaxwellNoLoss,
    /// Maxwell cloak with conductive layer on `B_1 \ B_{1/2}`, object in `B_{1/2}`.
    MaxwellLossy,
}

impl Variant {
    pub fn is_maxwell(&self) -> bool {
        matches!(self, Variant::MaxwellNoLoss | Variant::MaxwellLossy)
    }
}

/// Isotropic constant object coefficients: `(a, sigma) = (lambda1 I, lambda2)`
/// for acoustics, `(eps_O, mu_O)` for Maxwell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectParams {
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Deserialization validates every invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct CloakConfig {
    pub dimension: usize,
    pub rho: f64,
    pub variant: Variant,
    pub object: ObjectParams,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dimension: usize,
    rho: f64,
    variant: Variant,
    object: ObjectParams,
}

impl TryFrom<RawConfig> for CloakConfig {
    type Error = CloakError;

    fn try_from(r: RawConfig) -> Result<Self> {
        CloakConfig::new(r.dimension, r.rho, r.variant, r.object)
    }
}

impl CloakConfig {
    pub fn new(dimension: usize, rho: f64, variant: Variant, object: ObjectParams) -> Result<Self> {
        let c = Self { dimension, rho, variant, object };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 0.5) {
            return Err(CloakError::InvalidInput(format!("rho = {} not in (0, 1/2)", self.rho)));
        }
        if self.dimension != 2 && self.dimension != 3 {
            return Err(CloakError::InvalidInput(format!("dimension {} not in {{2, 3}}", self.dimension)));
        }
        if self.variant.is_maxwell() && self.dimension != 3 {
            return Err(CloakError::InvalidInput("Maxwell variants are three-dimensional".into()));
        }
        let ObjectParams { lambda1, lambda2 } = self.object;
        if !(lambda1 > 0.0 && lambda2 > 0.0 && lambda1.is_finite() && lambda2.is_finite()) {
            return Err(CloakError::InvalidInput("object coefficients must be positive".into()));
        }
        match self.variant {
            Variant::RhoLossy { gamma } if !(gamma.is_finite() && gamma > -1.0) => {
                Err(CloakError::InvalidInput(format!("gamma = {gamma} must exceed -1")))
            }
            Variant::DrudeLorentz { sigma_n, sigma_d, omega_c } => {
                if !(sigma_n > 0.0 && sigma_d > 0.0) {
                    return Err(CloakError::InvalidInput("sigma_N and sigma_D must be positive".into()));
                }
                if let Some(w) = omega_c {
                    if !(w > 0.0) {
                        return Err(CloakError::InvalidInput("omega_c must be positive".into()));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        let mut c = self.clone();
        c.rho = rho;
        c.validate()?;
        Ok(c)
    }

    /// Drude-Lorentz resonant frequency in effect for this configuration.
    pub fn omega_c(&self) -> Option<f64> {
        match self.variant {
            Variant::DrudeLorentz { omega_c, .. } => {
                Some(omega_c.unwrap_or_else(|| self.rho.powf(-(self.dimension as f64) / 2.0)))
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj() -> ObjectParams {
        ObjectParams { lambda1: 1.0, lambda2: 1.0 }
    }

    #[test]
    fn rejects_bad_rho() {
        assert!(CloakConfig::new(3, 0.7, Variant::FixedLossy, obj()).is_err());
        assert!(CloakConfig::new(3, 0.0, Variant::FixedLossy, obj()).is_err());
        assert!(CloakConfig::new(3, 0.1, Variant::FixedLossy, obj()).is_ok());
    }

    #[test]
    fn maxwell_needs_three_dimensions() {
        assert!(CloakConfig::new(2, 0.1, Variant::MaxwellNoLoss, obj()).is_err());
    }

    #[test]
    fn deserialization_validates() {
        let ok = r#"{"dimension":3,"rho":0.1,"variant":{"kind":"rho_lossy","gamma":0.5},"object":{"lambda1":1,"lambda2":1}}"#;
        assert!(serde_json::from_str::<CloakConfig>(ok).is_ok());
        let bad_rho = ok.replace("0.1", "0.7");
        assert!(serde_json::from_str::<CloakConfig>(&bad_rho).unwrap_err().to_string().contains("(0, 1/2)"));
        let no_gamma = ok.replace(r#","gamma":0.5"#, "");
        assert!(serde_json::from_str::<CloakConfig>(&no_gamma).is_err());
        let extra = ok.replace(r#""rho":0.1"#, r#""rho":0.1,"radius":2"#);
        assert!(serde_json::from_str::<CloakConfig>(&extra).is_err());
    }

    #[test]
    fn drude_lorentz_default_frequency() {
        let c = CloakConfig::new(3, 0.01, Variant::DrudeLorentz { sigma_n: 1.0, sigma_d: 1.0, omega_c: None }, obj())
            .unwrap();
        assert!((c.omega_c().unwrap() - 1000.0).abs() < 1e-9);
    }
}
