//! Job configuration, headers, and exit codes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use milnor_core::expansion::{build_special, Expansion, ExpansionFile, SpecialExpansion, Strategy};
use milnor_core::freegroup::{LongitudeTuple, LongitudeTupleFile};
use milnor_core::milnor::LinkData;
use milnor_core::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::parse;

/// Malformed input or flags.
pub const EXIT_INPUT: i32 = 2;
/// A mathematical precondition such as the filtration level fails.
pub const EXIT_PRECONDITION: i32 = 3;
/// An internal invariant fails.
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Parse(_) | Error::Index { .. } | Error::Mismatch(_)) => EXIT_INPUT,
            CliError::Core(Error::Internal(_)) => EXIT_INTERNAL,
            CliError::Core(_) => EXIT_PRECONDITION,
            CliError::Io { .. } | CliError::Json { .. } | CliError::Usage(_) => EXIT_INPUT,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
    Dot,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct JobArgs {
    /// Number of strands (inferred from the input when omitted).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Truncation degree of the expansion.
    #[arg(long = "N", global = true)]
    pub truncation: Option<usize>,
    /// Filtration parameter.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Use the randomized special expansion with this seed.
    #[arg(long, global = true, conflicts_with = "expansion")]
    pub seed: Option<u64>,
    /// Read the expansion from a JSON file.
    #[arg(long, global = true)]
    pub expansion: Option<PathBuf>,
    /// Pure braid word, e.g. "[A(1,2),A(1,3)]".
    #[arg(long, global = true, conflicts_with = "tuple", allow_hyphen_values = true)]
    pub braid: Option<String>,
    /// Read a longitude tuple from a JSON file.
    #[arg(long, global = true)]
    pub tuple: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Directory that receives the output document and DOT files.
    #[arg(long, global = true, env = "MILNOR_OUT_DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum ExpansionChoice {
    Canonical,
    Randomized { seed: u64 },
    File { path: PathBuf, file: ExpansionFile },
}

#[derive(Debug, Clone)]
pub enum InputSource {
    Braid { text: String, link: LinkData },
    Tuple { path: PathBuf, link: LinkData },
}

impl InputSource {
    pub fn link(&self) -> &LinkData {
        match self {
            InputSource::Braid { link, .. } | InputSource::Tuple { link, .. } => link,
        }
    }
}

/// A validated job: `n >= 2`, `N >= 1`, `k >= 1`.
#[derive(Debug, Clone)]
pub struct JobConfig {
    pub n: Option<usize>,
    pub truncation: Option<usize>,
    pub k: usize,
    pub expansion: ExpansionChoice,
    pub input: Option<InputSource>,
    pub format: Format,
    pub out_dir: Option<PathBuf>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.into(), source })
}

fn agree(n: &mut Option<usize>, other: usize, what: &str) -> CliResult<()> {
    match *n {
        Some(m) if m != other => Err(Error::Mismatch(format!("--n {m} but {what} has n = {other}")).into()),
        _ => {
            *n = Some(other);
            Ok(())
        }
    }
}

impl JobConfig {
    pub fn from_args(args: &JobArgs) -> CliResult<Self> {
        let mut n = args.n;
        let expansion = match (&args.expansion, args.seed) {
            (Some(path), _) => {
                let file: ExpansionFile = read_json(path)?;
                agree(&mut n, file.n, "the expansion file")?;
                ExpansionChoice::File { path: path.clone(), file }
            }
            (None, Some(seed)) => ExpansionChoice::Randomized { seed },
            (None, None) => ExpansionChoice::Canonical,
        };
        let input = match (&args.braid, &args.tuple) {
            (Some(text), _) => {
                let strands = parse::strands(text)?;
                let n = *n.get_or_insert(strands.max(2));
                let braid = parse::parse_braid(text, n)?;
                Some(InputSource::Braid { text: text.clone(), link: braid.into() })
            }
            (None, Some(path)) => {
                let file: LongitudeTupleFile = read_json(path)?;
                agree(&mut n, file.n, "the longitude tuple")?;
                let t = LongitudeTuple::from_file(&file)?;
                Some(InputSource::Tuple { path: path.clone(), link: t.into() })
            }
            (None, None) => None,
        };
        if let Some(m) = n {
            if m < 2 {
                return Err(CliError::Usage(format!("--n must be >= 2, got {m}")));
            }
        }
        if args.truncation == Some(0) {
            return Err(CliError::Usage("--N must be >= 1".into()));
        }
        if args.k == Some(0) {
            return Err(CliError::Usage("--k must be >= 1".into()));
        }
        Ok(JobConfig {
            n,
            truncation: args.truncation,
            k: args.k.unwrap_or(1),
            expansion,
            input,
            format: args.format,
            out_dir: args.out.clone(),
        })
    }

    pub fn n(&self) -> CliResult<usize> {
        self.n.ok_or_else(|| CliError::Usage("--n is required (no input to infer it from)".into()))
    }

    pub fn input(&self) -> CliResult<&InputSource> {
        self.input.as_ref().ok_or_else(|| CliError::Usage("an input is required: pass --braid or --tuple".into()))
    }

    pub fn link(&self) -> CliResult<&LinkData> {
        Ok(self.input()?.link())
    }

    /// `--N` when given (it must reach `needed`), otherwise `needed`.
    pub fn truncation_at_least(&self, needed: usize) -> CliResult<usize> {
        match self.truncation {
            Some(t) if t < needed => {
                Err(Error::Precondition(format!("this job needs --N >= {needed}, got {t}")).into())
            }
            Some(t) => Ok(t),
            None => Ok(needed),
        }
    }

    /// The selected expansion known to degree `trunc`, unchecked.
    pub fn raw_expansion(&self, trunc: usize) -> CliResult<Expansion> {
        let n = self.n()?;
        Ok(match &self.expansion {
            ExpansionChoice::Canonical => build_special(n, trunc, Strategy::Canonical)?,
            ExpansionChoice::Randomized { seed } => build_special(n, trunc, Strategy::Randomized { seed: *seed })?,
            ExpansionChoice::File { file, .. } => {
                if file.truncation < trunc {
                    return Err(Error::Precondition(format!(
                        "the expansion file is truncated at N = {} but degree {trunc} is needed",
                        file.truncation
                    ))
                    .into());
                }
                Expansion::from_file(file)?.retruncate(trunc)
            }
        })
    }

    /// The selected special expansion known to degree `trunc`.
    pub fn theta(&self, trunc: usize) -> CliResult<SpecialExpansion> {
        Ok(SpecialExpansion::new(self.raw_expansion(trunc)?)?)
    }

    pub fn header(&self, command: &str, truncation: Option<usize>) -> Header {
        Header {
            tool: "milnor",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            n: self.n,
            truncation,
            k: self.k,
            expansion: match &self.expansion {
                ExpansionChoice::Canonical => ExpansionHeader::Canonical,
                ExpansionChoice::Randomized { seed } => ExpansionHeader::Randomized { seed: *seed },
                ExpansionChoice::File { path, .. } => ExpansionHeader::File { path: path.display().to_string() },
            },
            input: self.input.as_ref().map(|i| match i {
                InputSource::Braid { text, .. } => InputHeader::Braid { braid: text.clone() },
                InputSource::Tuple { path, .. } => InputHeader::Tuple { tuple: path.display().to_string() },
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExpansionHeader {
    Canonical,
    Randomized { seed: u64 },
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum InputHeader {
    Braid { braid: String },
    Tuple { tuple: String },
}

/// Reproducibility record at the top of every document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    pub k: usize,
    pub expansion: ExpansionHeader,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputHeader>,
}

impl fmt::Display for Header {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "# {} {} {}", self.tool, self.version, self.command)?;
        if let Some(n) = self.n {
            write!(f, " n={n}")?;
        }
        if let Some(t) = self.truncation {
            write!(f, " N={t}")?;
        }
        write!(f, " k={}", self.k)?;
        match &self.expansion {
            ExpansionHeader::Canonical => write!(f, " expansion=canonical")?,
            ExpansionHeader::Randomized { seed } => write!(f, " expansion=randomized seed={seed}")?,
            ExpansionHeader::File { path } => write!(f, " expansion=file:{path}")?,
        }
        match &self.input {
            Some(InputHeader::Braid { braid }) => write!(f, " braid=\"{braid}\"")?,
            Some(InputHeader::Tuple { tuple }) => write!(f, " tuple={tuple}")?,
            None => {}
        }
        Ok(())
    }
}
