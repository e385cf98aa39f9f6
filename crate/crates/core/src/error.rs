use thiserror::Error;

use crate::params::State;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("response curve is not differentiable at x = {x}")]
    NonDifferentiablePoint { x: f64 },

    #[error("derivative order {0} not supported (0..=3)")]
    InvalidOrder(u8),

    #[error("position |x| = {x} lies outside the ice sheet of half-width {l}")]
    OutOfProfile { x: f64, l: f64 },

    #[error("snow line is complex: eps + 2 lambda + 1/4 < 0 at lambda = {lambda}, eps = {epsilon}")]
    ComplexSnowline { lambda: f64, epsilon: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("nonpositive scale {symbol} = {value}")]
    Scale { symbol: &'static str, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no lambda branches for xi = {xi}, eps = {epsilon} (admissible eps range ends at {threshold})")]
    NoBranches { xi: f64, epsilon: f64, threshold: f64 },

    #[error("f' vanishes at the critical point")]
    DegenerateSlope,

    #[error("not a Hopf candidate: need g' > f' > 0, got f' = {f1}, g' = {g1}")]
    NotHopfCandidate { f1: f64, g1: f64 },

    #[error("not a tangency: f' = {f1}, g' = {g1}")]
    NotTangent { f1: f64, g1: f64 },

    #[error("step size underflow at tau = {tau} (h = {step})")]
    Stiffness { tau: f64, step: f64, state: State },

    #[error("ill-conditioned transformation: {0}")]
    Conditioning(String),

    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
