use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("quadrature of exactness degree {0} is not supported")]
    UnsupportedDegree(usize),

    #[error("unsupported polynomial degree M={0} (supported: 1..=3)")]
    UnsupportedOrder(usize),

    #[error("singular space-time matrix: {0}")]
    SingularMatrix(&'static str),

    #[error("invalid state: {reason} (component {component}, value {value:e})")]
    InvalidState {
        component: usize,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid state on the path between face traces")]
    PathState,

    #[error("degenerate eigenstructure (condition number {0:e})")]
    DegenerateEigenstructure(f64),

    #[error("loss of hyperbolicity: eigenvector deficiency near resonance")]
    HyperbolicityLoss,

    #[error("degenerate face geometry (zero normal)")]
    DegenerateFace,

    #[error("mesh structure error: {0}")]
    MeshStructure(String),

    #[error("tangled mesh: element {element} has area {area:e}")]
    TangledMesh { element: usize, area: f64 },

    #[error("inverted space-time element {element} (det {det:e})")]
    InvertedElement { element: usize, det: f64 },

    #[error("stencil least-squares system of element {0} is rank deficient")]
    StencilConditioning(usize),

    #[error("space-time predictor of element {element} did not converge (residual {residual:e})")]
    PredictorDivergence { element: usize, residual: f64 },

    #[error("element {element}: {source}")]
    InElement {
        element: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("nonpositive time step {0:e}")]
    NonPositiveTimeStep(f64),

    #[error("unknown case `{name}`; available cases: {available}")]
    UnknownCase { name: String, available: String },

    #[error("unknown boundary tag `{0}`")]
    UnknownBoundaryTag(String),

    #[error("parameter domain error: {0}")]
    ParameterDomain(&'static str),

    #[error("point ({0}, {1}) lies outside the mesh")]
    PointOutsideMesh(f64, f64),

    #[error("reference solver failed: {0}")]
    Oracle(String),

    #[error("parse error in {path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn in_element(self, element: usize) -> Self {
        match self {
            e @ Error::InElement { .. } => e,
            e => Error::InElement {
                element,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, with element context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::InElement { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
