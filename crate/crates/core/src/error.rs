use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rank deficient input at step {0}")]
    RankDeficient(usize),
    #[error("input vectors are not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),
    #[error("invalid curve specification: {0}")]
    InvalidSpec(String),
    #[error("parameter {u} outside domain [{min}, {max}]")]
    OutOfDomain { u: f64, min: f64, max: f64 },
    #[error("curve speed {speed:e} below threshold at u = {u}")]
    DegenerateSpeed { u: f64, speed: f64 },
    #[error("curve is not unit speed at u = {u} (|γ'| = {speed})")]
    NotUnitSpeed { u: f64, speed: f64 },
    #[error("step {h} too large for interval of length {length} (at most length/8)")]
    StepTooLarge { h: f64, length: f64 },
    #[error("Frenet frame undefined: derivative {0} is dependent on the lower ones")]
    FrenetUndefined(usize),
    #[error("Euler angles in gimbal lock (|cos θ| = {0:e})")]
    GimbalLock(f64),
    #[error("frames do not share a tangent (|ΔT| = {0:e})")]
    MismatchedTangent(f64),
    #[error("nonpositive radius {r} at u = {u}")]
    NonpositiveRadius { u: f64, r: f64 },
    #[error("irregular surface point (W² = {0:e})")]
    Irregular(f64),
    #[error("patch is not orthogonal (F = {0:e})")]
    NonOrthogonalPatch(f64),
    #[error("wrong evaluation mode: {0}")]
    WrongMode(String),
    #[error("tube formula singular (f = {0:e})")]
    TubeSingular(f64),
    #[error("printed formula {printed} disagrees with |H| = {norm}")]
    FormulaMismatch { printed: f64, norm: f64 },
    #[error("grid {nu}x{nv} too small (need at least 5x5)")]
    GridTooSmall { nu: usize, nv: usize },
    #[error("surface is not a tube over a straight line: {0}")]
    NotATube(String),
    #[error("u = {u} lies off the principal branch (u/c1 + C = {arg})")]
    BranchViolation { u: f64, arg: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient(_)
                | Error::DegenerateSpeed { .. }
                | Error::FrenetUndefined(_)
                | Error::GimbalLock(_)
                | Error::Irregular(_)
                | Error::NonOrthogonalPatch(_)
                | Error::TubeSingular(_)
                | Error::FormulaMismatch { .. }
                | Error::BranchViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
