use thiserror::Error;

use crate::projection::KktReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coincident centers: contact normal undefined")]
    CoincidentCenters,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("glued pair {0} is missing from the neighbor set")]
    GluedPairMissing(String),

    #[error("particle {particle} lies inside obstacle {obstacle} (distance {distance:e})")]
    InsideObstacle {
        particle: usize,
        obstacle: usize,
        distance: f64,
    },

    #[error("equality constraints are inconsistent (rows {rows:?})")]
    InfeasibleEqualities { rows: Vec<usize> },

    #[error("projection did not converge after {iterations} sweeps ({report})")]
    NotConverged { iterations: usize, report: KktReport },

    #[error("brute-force projection supports at most {max} rows, got {got}")]
    TooManyRows { max: usize, got: usize },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("lubrication integrator: gap fell below floor {floor:e} at t = {time}")]
    GapUnderflow { time: f64, floor: f64 },

    #[error("could not place particle {index} without overlap after {attempts} attempts")]
    Placement { index: usize, attempts: usize },

    #[error("config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Error {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}
