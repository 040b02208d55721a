use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] memopt_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl HarnessError {
    /// 2 for bad input, 3 for infeasible or unsupported tasks, 4 for numerical
    /// failure, 1 for file-system trouble.
    pub fn exit_code(&self) -> i32 {
        use memopt_core::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Io(_) => 1,
            Self::Solver(e) => match e {
                E::Domain(_) | E::Input(_) => 2,
                E::Infeasible(_) | E::UnsupportedDirection(_) => 3,
                E::SingularControl { .. } | E::Bracket { .. } | E::NoConvergence { .. } | E::NonFinite { .. } => 4,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        use memopt_core::Error as E;
        match self {
            Self::Config(_) => "config",
            Self::Io(_) => "io",
            Self::Solver(e) => match e {
                E::Domain(_) => "domain",
                E::Input(_) => "input",
                E::Infeasible(_) => "infeasible",
                E::UnsupportedDirection(_) => "unsupported-direction",
                E::SingularControl { .. } => "singular-control",
                E::Bracket { .. } => "bracket",
                E::NoConvergence { .. } => "no-convergence",
                E::NonFinite { .. } => "non-finite",
            },
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": { "kind": self.kind(), "exit_code": self.exit_code(), "message": self.to_string() } })
    }
}
