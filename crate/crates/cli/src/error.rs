use std::fmt::Display;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn field(path: &str, msg: impl Display) -> Self {
        CliError::Config(format!("at `{path}`: {msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<mmuav_core::Error> for CliError {
    fn from(e: mmuav_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
