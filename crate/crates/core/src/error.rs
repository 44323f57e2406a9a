use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("gimbal lock: pitch {pitch_rad} rad is too close to vertical")]
    GimbalLock { pitch_rad: f64 },
    #[error("gaze does not point toward the target plane (dir.x = {dir_x})")]
    GazeParallel { dir_x: f64 },
    #[error("muscle {muscle} path passes {clearance} m from the globe centre")]
    PenetratingPath { muscle: String, clearance: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("plant diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("episode already finished; call reset first")]
    EpisodeFinished,
    #[error(transparent)]
    Plant(#[from] PlantError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
}

impl NetError {
    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        NetError::ShapeMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("replay buffer holds {len} transitions, batch needs {batch}")]
    BufferTooSmall { len: usize, batch: usize },
    #[error("training diverged at episode {episode}: {reason} (state dumped to {dump:?})")]
    Diverged {
        episode: usize,
        reason: String,
        dump: Option<PathBuf>,
    },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("i/o failure at {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no samples left after dropping the first {drop} steps")]
    EmptyAfterDrop { drop: usize },
    #[error("checkpoint {path:?} unreadable: {source}")]
    CheckpointUnreadable {
        path: PathBuf,
        #[source]
        source: CheckpointError,
    },
    #[error("no checkpoints given")]
    NoCheckpoints,
    #[error("i/o failure at {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed series file {path:?}: {reason}")]
    Series { path: PathBuf, reason: String },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },
    #[error("cannot read config {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint checksum mismatch or truncated data")]
    CorruptChecksum,
    #[error("malformed checkpoint: {0}")]
    Format(String),
}
