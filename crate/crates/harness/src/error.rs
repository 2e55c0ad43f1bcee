use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error{}{}: {message}", key_part(key), line_part(*line))]
    Config {
        key: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] ris_core::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

fn key_part(key: &str) -> String {
    if key.is_empty() {
        String::new()
    } else {
        format!(" in `{key}`")
    }
}

fn line_part(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

impl HarnessError {
    /// Configuration problems map to exit code 1, everything else to 2.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            HarnessError::Config { .. } | HarnessError::Core(ris_core::Error::Config(_))
        )
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            1
        } else {
            2
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
