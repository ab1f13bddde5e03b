//! Crate-wide error type.

/// Errors produced by parsing, sampling, training, and experiment execution.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Constraint or model text could not be parsed.
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    /// An expression or data file referenced an option the space does not declare.
    #[error("unknown option `{0}`")]
    UnknownOption(String),

    /// Two options share one name.
    #[error("duplicate option name `{0}`")]
    DuplicateOption(String),

    /// A numeric option domain is empty, unsorted, or otherwise unusable.
    #[error("numeric option `{name}`: {reason}")]
    BadDomain { name: String, reason: String },

    /// The raw cross product of all domains is too large to enumerate.
    #[error("raw configuration count {raw} exceeds enumeration cap {cap}")]
    EnumerationCap { raw: u128, cap: u128 },

    /// A sampler was asked for more configurations than exist.
    #[error("requested sample size {requested} exceeds population size {available}")]
    SampleTooLarge { requested: usize, available: usize },

    /// Box-Behnken designs need at least three numeric options.
    #[error("Box-Behnken design requires at least 3 numeric options, space has {0}")]
    BoxBehnkenTooFew(usize),

    /// A full factorial sub-design would exceed the configured cap.
    #[error("factorial portion of size 2^{options} exceeds cap {cap}")]
    FactorialCap { options: usize, cap: usize },

    /// The bundled or loaded Plackett-Burman seed has fewer columns than the space has numeric options.
    #[error("Plackett-Burman seed ({configs} runs, {levels} levels) covers {seed_len} options, space has {options}")]
    PbdSeedTooShort { configs: usize, levels: usize, seed_len: usize, options: usize },

    /// No Plackett-Burman seed with the requested shape is known.
    #[error("no Plackett-Burman seed with {configs} runs and {levels} levels is available")]
    PbdSeedUnknown { configs: usize, levels: usize },

    /// Every D-optimal restart produced a singular information matrix.
    #[error("candidate set is deficient for the model terms: every restart produced a singular information matrix")]
    CandidateDeficient,

    /// Kernel system cannot be solved; regularisation is required.
    #[error("kernel matrix is singular; use alpha > 0")]
    SingularKernel,

    /// A hyper-parameter key is not part of the learner's parameter set.
    #[error("learner {learner} has no hyper-parameter `{key}`")]
    UnknownHyperParam { learner: String, key: String },

    /// A hyper-parameter value is outside its admissible range or of the wrong kind.
    #[error("hyper-parameter `{key}`: {reason}")]
    BadHyperParam { key: String, reason: String },

    /// A predictor was probed with a configuration from another space.
    #[error("configuration does not belong to the space the predictor was trained on")]
    SpaceMismatch,

    /// Training or cross-validation got fewer rows than the procedure needs.
    #[error("{context}: needs at least {needed} rows, got {got}")]
    NotEnoughRows { context: &'static str, needed: usize, got: usize },

    /// Measurements must be strictly positive so relative errors are defined.
    #[error("measured value {value} is not strictly positive")]
    NonPositiveMeasurement { value: f64 },

    /// One or more data rows were rejected; each entry carries its 1-based line number.
    #[error("rejected {} row(s): {}", .0.len(), format_rejects(.0))]
    RejectedRows(Vec<(usize, String)>),

    /// A required CSV column is missing.
    #[error("missing column `{0}`")]
    MissingColumn(String),

    /// Learning-set assembly dropped every candidate pairing.
    #[error("learning set is empty after constraint filtering")]
    EmptyLearningSet,

    /// Catch-all for violated preconditions that carry their own message.
    #[error("{0}")]
    InvalidInput(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

fn format_rejects(rows: &[(usize, String)]) -> String {
    let mut out = String::new();
    for (i, (line, reason)) in rows.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(&format!("line {line}: {reason}"));
        if i == 4 && rows.len() > 5 {
            out.push_str(&format!("; ... and {} more", rows.len() - 5));
            break;
        }
    }
    out
}
