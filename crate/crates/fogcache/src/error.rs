use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] fogcache_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error("{}: {source}", path.display())]
    Manifest { path: PathBuf, source: toml::de::Error },

    #[error("unknown preset `{0}`; expected one of fig1a, fig1b, fig2, fig3, fig4, fig5, fig6, fig7, fig8a, fig8b")]
    UnknownPreset(String),

    #[error("{failed} of {total} sweep points failed")]
    PointsFailed { failed: usize, total: usize },
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    /// 2 for anything the user can fix in the configuration, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use fogcache_core::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::UnknownPreset(_) => 2,
            HarnessError::Model(E::InvalidParameter { .. } | E::TooManyCombinations { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
