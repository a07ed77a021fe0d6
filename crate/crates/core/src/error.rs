use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parameter rejected: {0}")]
    ParameterRejection(String),
    #[error("extraction failed on {} face(s) with small modulus", faces.len())]
    ExtractionFailure { faces: Vec<crate::extract::CoarseFace> },
    #[error("construction error: {0}")]
    Construction(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("circulation defect {defect:.3e} on unpierced plaquette (axis {axis}, vertex {vertex})")]
    CirculationDefect { axis: usize, vertex: usize, defect: f64 },
    #[error("numerical contract violated: {0}")]
    NumericalContract(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical guarantee rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalContract(_)
                | Error::CirculationDefect { .. }
                | Error::Construction(_)
                | Error::Assembly(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
