//! Error-to-exit-code mapping.
//!
//! Data problems (missing/corrupt/invalid inputs) exit with 3; numeric
//! failures (solver non-convergence, divergence, non-finite data) exit
//! with 4. Usage errors are clap's domain and exit with 2.

use std::fmt;

use edakit::augment::AugmentError;
use edakit::decompose::DecomposeError;
use edakit::encoder::EncoderError;
use edakit::eval::EvalError;
use edakit::features::io::FeatureIoError;
use edakit::ingest::IngestError;
use edakit::probe::ProbeError;
use edakit::segment::shard::ShardError;
use edakit::segment::SegmentError;
use edakit::signal::SignalError;
use edakit::train::TrainError;

#[derive(Debug)]
pub enum CliError {
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn code_name(&self) -> &'static str {
        match self {
            CliError::Data(_) => "data",
            CliError::Numeric(_) => "numeric",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Data(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("io: {e}"))
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(format!("ingest: {e}"))
    }
}

impl From<SignalError> for CliError {
    fn from(e: SignalError) -> Self {
        match e {
            SignalError::NonFinite(_) => CliError::Numeric(format!("signal: {e}")),
            _ => CliError::Data(format!("signal: {e}")),
        }
    }
}

impl From<DecomposeError> for CliError {
    fn from(e: DecomposeError) -> Self {
        match e {
            DecomposeError::SolverDidNotConverge { .. } | DecomposeError::Factorization => {
                CliError::Numeric(format!("decompose: {e}"))
            }
            _ => CliError::Data(format!("decompose: {e}")),
        }
    }
}

impl From<AugmentError> for CliError {
    fn from(e: AugmentError) -> Self {
        CliError::Data(format!("augment: {e}"))
    }
}

impl From<SegmentError> for CliError {
    fn from(e: SegmentError) -> Self {
        CliError::Data(format!("segment: {e}"))
    }
}

impl From<ShardError> for CliError {
    fn from(e: ShardError) -> Self {
        CliError::Data(format!("shard: {e}"))
    }
}

impl From<EncoderError> for CliError {
    fn from(e: EncoderError) -> Self {
        CliError::Data(format!("encoder: {e}"))
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Diverged { .. } | TrainError::NonFinite(_) | TrainError::ZeroVector(_) => {
                CliError::Numeric(format!("train: {e}"))
            }
            _ => CliError::Data(format!("train: {e}")),
        }
    }
}

impl From<ProbeError> for CliError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::NonFinite(_) => CliError::Numeric(format!("probe: {e}")),
            _ => CliError::Data(format!("probe: {e}")),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::ZeroVariance => CliError::Numeric(format!("eval: {e}")),
            _ => CliError::Data(format!("eval: {e}")),
        }
    }
}

impl From<FeatureIoError> for CliError {
    fn from(e: FeatureIoError) -> Self {
        CliError::Data(format!("features: {e}"))
    }
}

impl From<edakit::bench::BenchError> for CliError {
    fn from(e: edakit::bench::BenchError) -> Self {
        CliError::Data(format!("bench: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(format!("json: {e}"))
    }
}

impl From<toml::de::Error> for CliError {
    fn from(e: toml::de::Error) -> Self {
        CliError::Data(format!("config: {e}"))
    }
}

impl From<toml::ser::Error> for CliError {
    fn from(e: toml::ser::Error) -> Self {
        CliError::Data(format!("config: {e}"))
    }
}
