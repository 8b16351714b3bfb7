use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("visibility undefined: curve is identically zero")]
    UndefinedVisibility,

    #[error("fringe parameters not identifiable: {0}")]
    Identifiability(String),

    #[error("period grid does not bracket a residual minimum: {0}")]
    Bracketing(String),

    #[error("invalid fit: {0}")]
    InvalidFit(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("singular dispersion: {0}")]
    Singularity(String),

    #[error("no resonance mode could be evaluated")]
    NoMode,

    #[error("subwavelength regime violated: {0}")]
    Regime(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for input validation, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UndefinedVisibility
            | Error::Identifiability(_)
            | Error::Bracketing(_)
            | Error::InvalidFit(_)
            | Error::OutOfRange(_)
            | Error::Singularity(_)
            | Error::NoMode => 3,
            _ => 2,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        Error::Parse {
            line,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

/// CSV text with `#` comment and blank lines removed. The csv crate leaves
/// those out of its own line count, so physical line numbers are kept here.
pub(crate) struct CsvText {
    text: String,
    lines: Vec<u64>,
}

impl CsvText {
    pub(crate) fn read<R: std::io::Read>(mut input: R) -> Result<Self> {
        let mut raw = String::new();
        input.read_to_string(&mut raw)?;
        let mut text = String::with_capacity(raw.len());
        let mut lines = Vec::new();
        for (i, l) in raw.lines().enumerate() {
            if l.trim().is_empty() || l.trim_start().starts_with('#') {
                continue;
            }
            text.push_str(l);
            text.push('\n');
            lines.push(i as u64 + 1);
        }
        Ok(Self { text, lines })
    }

    pub(crate) fn reader(&self) -> csv::Reader<&[u8]> {
        csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(self.text.as_bytes())
    }

    pub(crate) fn line(&self, pos: &csv::Position) -> u64 {
        let k = pos.line() as usize;
        self.lines
            .get(k.saturating_sub(1))
            .copied()
            .unwrap_or(k as u64)
    }

    pub(crate) fn header_line(&self) -> u64 {
        self.lines.first().copied().unwrap_or(1)
    }

    pub(crate) fn error(&self, e: csv::Error) -> Error {
        let line = e.position().map_or(0, |p| self.line(p));
        Error::Parse {
            line,
            message: e.to_string(),
        }
    }
}
