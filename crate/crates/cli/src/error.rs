use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: optospring::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn stage(stage: &'static str) -> impl FnOnce(optospring::Error) -> CliError {
        move |source| CliError::Stage { stage, source }
    }

    /// 2 for bad input, 4 for physically unreachable targets, 3 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Stage { source, .. } if source.is_infeasible() => 4,
            CliError::Stage {
                source: optospring::Error::InvalidConfig { .. },
                ..
            } => 2,
            CliError::Stage { .. } | CliError::Io { .. } => 3,
        }
    }
}
