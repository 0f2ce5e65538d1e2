use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("certificate failure at ({x}, {y}): margin {margin:e} ({what})")]
    CertificateFailure { what: String, x: f64, y: f64, margin: f64 },

    #[error("budget exhausted in {stage}: {detail}")]
    Budget { stage: String, detail: String },

    #[error("refused: {0}")]
    Refused(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("subadditivity counterexample: t={t}, s={s}, excess={excess:e}")]
    Counterexample { t: f64, s: f64, excess: f64 },

    #[error("grid: {0}")]
    Grid(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }
}
