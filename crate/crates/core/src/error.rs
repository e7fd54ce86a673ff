//! Error types shared by all analysis stages.

use thiserror::Error;

/// Everything that can go wrong while building or analyzing phase data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("elements belong to different rings: F_{p_a}[u]/(u^{m_a}) vs F_{p_b}[u]/(u^{m_b})")]
    MismatchedRings { p_a: u8, m_a: u8, p_b: u8, m_b: u8 },

    #[error("value table is not a quadratic phase: third difference in directions ({h1}, {h2}, {h3}) is nonzero at x={x}")]
    NotQuadratic { h1: u32, h2: u32, h3: u32, x: u32 },

    #[error("polarization is not biadditive: witness triple (x={x}, x'={x2}, y={y})")]
    NotBiadditive { x: u32, x2: u32, y: u32 },

    #[error("phase has nonempty obstruction strata and is not a rigidity island")]
    NotAnIsland,

    #[error("signature search exceeded cap ({limit}): {what}")]
    SignatureTooLarge { what: String, limit: usize },

    #[error("size cap exceeded: {what} = {actual}, cap {cap}")]
    SizeCap {
        what: String,
        actual: usize,
        cap: usize,
    },

    #[error("invalid config at `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("deformation lift index {index} out of range for stratum at depth {depth} ({available} lifts)")]
    LiftOutOfRange {
        depth: usize,
        index: usize,
        available: usize,
    },

    #[error("internal invariant breached: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
