use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CloakError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("special function: {0}")]
    SpecialFunction(String),
    #[error("degenerate jacobian at {0:?}")]
    DegenerateJacobian([f64; 3]),
    #[error("ill-conditioned mode system (n = {mode}, condition estimate {condition:.3e}): {detail}")]
    Conditioning { mode: usize, condition: f64, detail: String },
    #[error("radial integration failed near r = {radius}: {detail}")]
    Integration { radius: f64, detail: String },
    #[error("frequency solve failed at omega = {omega}: {source}")]
    Frequency {
        omega: f64,
        #[source]
        source: Box<CloakError>,
    },
    #[error("sweep entry rho = {rho}: {source}")]
    Sweep {
        rho: f64,
        #[source]
        source: Box<CloakError>,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("configuration is not resonant; nearest resonance at omega = {nearest:?}")]
    NotResonant { nearest: Option<f64> },
}

pub type Result<T> = std::result::Result<T, CloakError>;
