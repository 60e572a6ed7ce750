use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point off manifold: residual {residual:e}")]
    OffManifold { residual: f64 },
    #[error("distance {distance} is not below the injectivity radius {limit}")]
    OutOfInjectivity { distance: f64, limit: f64 },
    #[error("duplicate points {0} and {1}")]
    DuplicatePoint(usize, usize),
    #[error("graph is not connected ({components} components)")]
    Disconnected { components: usize },
    #[error("vertex {0} has degree zero")]
    IsolatedVertex(usize),
    #[error("grid cell {0} holds no vertex")]
    EmptyCell(usize),
    #[error("path step {0} -> {1} is not a graph edge")]
    NonAdjacent(usize, usize),
    #[error("spectrum not covered at eigenvalue {0}")]
    Frame(f64),
    #[error("{0} vertices exceed the dense cap of {1}")]
    TooLarge(usize, usize),
    #[error("declared constant {name} fails verification: {detail}")]
    Constant { name: &'static str, detail: String },
    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Internal(format!("serialization: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
