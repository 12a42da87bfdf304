//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("grid size must be a power of two >= 8, got {0}")]
    BadGridSize(usize),
    #[error("grid half-width must be positive and finite, got {0}")]
    BadGridExtent(f64),
    #[error("field dimensions {got}x{got} do not match grid {want}x{want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("mode index {j} exceeds the supported magnitude {max}")]
    ModeIndexOverflow { j: i64, max: i64 },
    #[error("band J = {band} is too large for brute-force resonance sums (max {max})")]
    BandTooLarge { band: u32, max: u32 },
    #[error("frequency {value:?} is not on the grid lattice (spacing {spacing})")]
    FrequencyOffLattice { value: [f64; 2], spacing: f64 },
    #[error("frequency {value:?} lies outside the representable lattice range {limit}")]
    FrequencyOutOfRange { value: [f64; 2], limit: f64 },
    #[error("scale factor {0} is not a power of two; general dilations are rejected")]
    NonDyadicScale(f64),
    #[error("transform not resolved on this grid: {0}")]
    OutOfResolution(String),
    #[error("state has zero mass; centers and scales are undefined")]
    ZeroMass,
    #[error("need at least {need} snapshots, got {got}")]
    TooFewSnapshots { need: usize, got: usize },
    #[error("snapshot times must be strictly increasing and uniformly spaced")]
    IrregularSnapshots,
    #[error("invalid stepper configuration: {0}")]
    BadStepper(String),
    #[error("relative mass drift {drift:.3e} exceeded {limit:.3e} at t = {t}; run is under-resolved")]
    MassDrift { t: f64, drift: f64, limit: f64 },
    #[error("non-finite value detected at t = {t}")]
    NonFinite { t: f64 },
    #[error("weight coefficients must satisfy a >= 0 and c >= 0, got a = {a}, c = {c}")]
    BadWeight { a: f64, c: f64 },
    #[error("unsupported exponent: {0}")]
    UnsupportedExponent(String),
    #[error("bilinear probe needs at least {need} octaves of M/N, got {got}")]
    TooFewOctaves { need: usize, got: usize },
    #[error("frequency shell {shell} is not resolved on this grid: {detail}")]
    UnresolvedShell { shell: i32, detail: String },
    #[error("snapshot file is malformed: {0}")]
    BadSnapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
