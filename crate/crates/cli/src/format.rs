//! Versioned JSON formats for channels, single processes and assemblages.
//!
//! Rational files carry every number as a `"p/q"` string (integers may be
//! bare); float files carry JSON numbers. Quantum wires are expressed in
//! the trace-orthonormal Gell-Mann basis named by [`BASIS_CONVENTION`].

use std::fmt;
use std::path::Path;

use num_traits::ToPrimitive;
use procgpt_core::epr::{Assemblage, Party};
use procgpt_core::scalar::{parse_rational, rational_to_string};
use procgpt_core::{LinearProcess, Matrix, MultipartiteChannel, Rational, Scalar, Signature, SystemType, Theory, Wing};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;
pub const BASIS_CONVENTION: &str = "gell-mann-normalized-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticTag {
    Rational,
    Float64,
}

impl fmt::Display for ArithmeticTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArithmeticTag::Rational => "rational",
            ArithmeticTag::Float64 => "float64",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireKind {
    Classical,
    Quantum,
}

/// A base-theory wire: classical with `dim` outcomes, or quantum with
/// Hilbert dimension `dim`. `{classical, 1}` is the trivial system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireSpec {
    pub kind: WireKind,
    pub dim: usize,
}

impl WireSpec {
    pub fn to_type(self) -> Result<SystemType, CliError> {
        let t = match self.kind {
            WireKind::Classical => SystemType::classical(self.dim),
            WireKind::Quantum => SystemType::quantum(self.dim),
        };
        t.map_err(|e| CliError::input(format!("wire {{{:?}, {}}}: {e}", self.kind, self.dim)))
    }

    pub fn from_type(t: &SystemType) -> Result<Self, CliError> {
        if t.is_extension() {
            return Err(CliError::input(format!("extension wire {t} has no file representation")));
        }
        let kind = if t.is_quantum() { WireKind::Quantum } else { WireKind::Classical };
        Ok(WireSpec { kind, dim: t.dim() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WingSpec {
    pub name: String,
    #[serde(rename = "in")]
    pub input: WireSpec,
    #[serde(rename = "out")]
    pub output: WireSpec,
}

/// One matrix entry as it appears in a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Text(String),
    Number(f64),
}

/// Scalars that can be written to and read from file entries.
pub trait FileScalar: Scalar {
    const TAG: ArithmeticTag;

    fn to_entry(&self) -> Entry;

    fn from_entry(e: &Entry) -> Result<Self, CliError>;
}

impl FileScalar for Rational {
    const TAG: ArithmeticTag = ArithmeticTag::Rational;

    fn to_entry(&self) -> Entry {
        Entry::Text(rational_to_string(self))
    }

    fn from_entry(e: &Entry) -> Result<Self, CliError> {
        match e {
            Entry::Text(s) => parse_rational(s).ok_or_else(|| CliError::input(format!("`{s}` is not a rational number"))),
            Entry::Number(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => Ok(Rational::from_int(*x as i64)),
            Entry::Number(x) => Err(CliError::input(format!(
                "{x} is a float literal; rational files write non-integers as \"p/q\" strings"
            ))),
        }
    }
}

impl FileScalar for f64 {
    const TAG: ArithmeticTag = ArithmeticTag::Float64;

    fn to_entry(&self) -> Entry {
        Entry::Number(*self)
    }

    fn from_entry(e: &Entry) -> Result<Self, CliError> {
        match e {
            Entry::Number(x) if x.is_finite() => Ok(*x),
            Entry::Number(x) => Err(CliError::input(format!("non-finite entry {x}"))),
            Entry::Text(s) => parse_rational(s)
                .and_then(|r| r.to_f64())
                .ok_or_else(|| CliError::input(format!("`{s}` is not a number"))),
        }
    }
}

pub fn entries<S: FileScalar>(values: &[S]) -> Vec<Entry> {
    values.iter().map(S::to_entry).collect()
}

pub fn parse_entries<S: FileScalar>(entries: &[Entry]) -> Result<Vec<S>, CliError> {
    entries.iter().map(S::from_entry).collect()
}

/// Rewrites an entry in the canonical spelling of its arithmetic.
fn canonical_entry(tag: ArithmeticTag, e: &Entry) -> Result<Entry, CliError> {
    Ok(match tag {
        ArithmeticTag::Rational => Rational::from_entry(e)?.to_entry(),
        ArithmeticTag::Float64 => f64::from_entry(e)?.to_entry(),
    })
}

fn check_header(version: u32, basis: Option<&str>, quantum: bool) -> Result<(), CliError> {
    if version != FORMAT_VERSION {
        return Err(CliError::input(format!("unsupported format version {version} (expected {FORMAT_VERSION})")));
    }
    match basis {
        Some(b) if b != BASIS_CONVENTION => {
            Err(CliError::input(format!("basis convention `{b}` is not `{BASIS_CONVENTION}`")))
        }
        None if quantum => Err(CliError::input("quantum wires require a basisConvention field")),
        _ => Ok(()),
    }
}

fn theory_for(types: &[SystemType]) -> Theory {
    if types.iter().any(SystemType::is_quantum) {
        Theory::Quant
    } else {
        Theory::Stoch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ChannelFile {
    pub version: u32,
    pub arithmetic: ArithmeticTag,
    pub wings: Vec<WingSpec>,
    /// Row-major, `∏ out vdims` rows by `∏ in vdims` columns.
    pub matrix: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_convention: Option<String>,
}

/// A channel file read into the arithmetic it declares.
#[derive(Debug, Clone)]
pub enum LoadedChannel {
    Exact(MultipartiteChannel<Rational>),
    Float(MultipartiteChannel<f64>),
}

impl ChannelFile {
    pub fn from_channel<S: FileScalar>(ch: &MultipartiteChannel<S>, names: Option<&[String]>) -> Result<Self, CliError> {
        let wings = ch
            .wings()
            .iter()
            .enumerate()
            .map(|(i, w)| {
                Ok(WingSpec {
                    name: names.and_then(|n| n.get(i).cloned()).unwrap_or_else(|| format!("w{}", i + 1)),
                    input: WireSpec::from_type(&w.input)?,
                    output: WireSpec::from_type(&w.output)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(ChannelFile {
            version: FORMAT_VERSION,
            arithmetic: S::TAG,
            wings,
            matrix: entries(ch.body().matrix().data()),
            basis_convention: Some(BASIS_CONVENTION.to_string()),
        })
    }

    pub fn wing_types(&self) -> Result<Vec<Wing>, CliError> {
        self.wings.iter().map(|w| Ok(Wing::new(w.input.to_type()?, w.output.to_type()?))).collect()
    }

    fn validate_header(&self) -> Result<Vec<Wing>, CliError> {
        let wings = self.wing_types()?;
        let quantum = wings.iter().any(|w| w.input.is_quantum() || w.output.is_quantum());
        check_header(self.version, self.basis_convention.as_deref(), quantum)?;
        if wings.is_empty() {
            return Err(CliError::input("a channel file needs at least one wing"));
        }
        let rows: usize = wings.iter().map(|w| w.output.vdim()).product();
        let cols: usize = wings.iter().map(|w| w.input.vdim()).product();
        if self.matrix.len() != rows * cols {
            return Err(CliError::input(format!(
                "matrix has {} entries, wings need {rows} × {cols} = {}",
                self.matrix.len(),
                rows * cols
            )));
        }
        Ok(wings)
    }

    /// Reads the channel in arithmetic `S`, checking validity at `tol`.
    pub fn to_channel<S: FileScalar>(&self, tol: f64) -> Result<MultipartiteChannel<S>, CliError> {
        let wings = self.validate_header()?;
        let rows: usize = wings.iter().map(|w| w.output.vdim()).product();
        let cols: usize = wings.iter().map(|w| w.input.vdim()).product();
        let data = parse_entries::<S>(&self.matrix)?;
        let types: Vec<SystemType> = wings.iter().flat_map(|w| [w.input, w.output]).collect();
        MultipartiteChannel::from_matrix(theory_for(&types), wings, Matrix::from_vec(rows, cols, data), tol)
            .map_err(|e| CliError::input(format!("channel rejected: {e}")))
    }

    pub fn load(&self, tol: Option<f64>) -> Result<LoadedChannel, CliError> {
        Ok(match self.arithmetic {
            ArithmeticTag::Rational => LoadedChannel::Exact(self.to_channel(tol.unwrap_or(0.0))?),
            ArithmeticTag::Float64 => LoadedChannel::Float(self.to_channel(tol.unwrap_or(f64::default_tol()))?),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.wings.iter().map(|w| w.name.clone()).collect()
    }

    /// Same file with every entry in canonical spelling.
    pub fn canonical(&self) -> Result<Self, CliError> {
        let mut c = self.clone();
        c.matrix = self.matrix.iter().map(|e| canonical_entry(self.arithmetic, e)).collect::<Result<_, _>>()?;
        c.basis_convention = Some(BASIS_CONVENTION.to_string());
        Ok(c)
    }

    /// `sha256:<hex>` of the compact canonical serialization, so that
    /// formatting and number spelling do not change the digest.
    pub fn digest(&self) -> Result<String, CliError> {
        let bytes = serde_json::to_vec(&self.canonical()?).map_err(CliError::json)?;
        Ok(format!("sha256:{}", hex::encode(Sha256::digest(&bytes))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProcessFile {
    pub version: u32,
    pub arithmetic: ArithmeticTag,
    pub inputs: Vec<WireSpec>,
    pub outputs: Vec<WireSpec>,
    pub matrix: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_convention: Option<String>,
}

fn signature(wires: &[WireSpec]) -> Result<Signature, CliError> {
    wires.iter().map(|w| w.to_type()).collect::<Result<Vec<_>, _>>().map(Signature::new)
}

fn specs(sig: &Signature) -> Result<Vec<WireSpec>, CliError> {
    sig.wires().iter().map(WireSpec::from_type).collect()
}

impl ProcessFile {
    pub fn from_process<S: FileScalar>(p: &LinearProcess<S>) -> Result<Self, CliError> {
        Ok(ProcessFile {
            version: FORMAT_VERSION,
            arithmetic: S::TAG,
            inputs: specs(p.inputs())?,
            outputs: specs(p.outputs())?,
            matrix: entries(p.matrix().data()),
            basis_convention: Some(BASIS_CONVENTION.to_string()),
        })
    }

    pub fn to_process<S: FileScalar>(&self) -> Result<LinearProcess<S>, CliError> {
        let (ins, outs) = (signature(&self.inputs)?, signature(&self.outputs)?);
        let quantum = ins.wires().iter().chain(outs.wires()).any(SystemType::is_quantum);
        check_header(self.version, self.basis_convention.as_deref(), quantum)?;
        let (rows, cols) = (outs.total_dim(), ins.total_dim());
        if self.matrix.len() != rows * cols {
            return Err(CliError::input(format!("matrix has {} entries, expected {}", self.matrix.len(), rows * cols)));
        }
        let m = Matrix::from_vec(rows, cols, parse_entries(&self.matrix)?);
        LinearProcess::new(ins, outs, m).map_err(CliError::input)
    }
}

/// A channel file or a process file; the former binds its whole body.
pub fn process_from_value<S: FileScalar>(v: serde_json::Value) -> Result<(ArithmeticTag, LinearProcess<S>), CliError> {
    if v.get("wings").is_some() {
        let f: ChannelFile = serde_json::from_value(v).map_err(CliError::json)?;
        let wings = f.validate_header()?;
        let ins = Signature::new(wings.iter().map(|w| w.input).collect());
        let outs = Signature::new(wings.iter().map(|w| w.output).collect());
        let m = Matrix::from_vec(outs.total_dim(), ins.total_dim(), parse_entries(&f.matrix)?);
        Ok((f.arithmetic,LinearProcess::new(ins, outs, m).map_err(CliError::input)?))
    } else {
        let f: ProcessFile = serde_json::from_value(v).map_err(CliError::json)?;
        Ok((f.arithmetic, f.to_process()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartySpec {
    pub settings: usize,
    pub outcomes: usize,
}

/// `elements[x][a]` are the Gell-Mann coordinates of `σ_{a|x}`, with `x`
/// and `a` mixed-radix over the untrusted parties (first most significant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AssemblageFile {
    pub version: u32,
    pub parties: Vec<PartySpec>,
    pub dim: usize,
    pub elements: Vec<Vec<Vec<f64>>>,
    pub basis_convention: String,
}

impl AssemblageFile {
    pub fn from_assemblage(a: &Assemblage) -> Self {
        AssemblageFile {
            version: FORMAT_VERSION,
            parties: a.parties.iter().map(|p| PartySpec { settings: p.settings, outcomes: p.outcomes }).collect(),
            dim: a.dim,
            elements: a.elements.clone(),
            basis_convention: BASIS_CONVENTION.to_string(),
        }
    }

    pub fn to_assemblage(&self) -> Result<Assemblage, CliError> {
        check_header(self.version, Some(&self.basis_convention), true)?;
        Ok(Assemblage {
            parties: self.parties.iter().map(|p| Party { settings: p.settings, outcomes: p.outcomes }).collect(),
            dim: self.dim,
            elements: self.elements.clone(),
        })
    }

    pub fn digest(&self) -> Result<String, CliError> {
        let bytes = serde_json::to_vec(self).map_err(CliError::json)?;
        Ok(format!("sha256:{}", hex::encode(Sha256::digest(&bytes))))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn to_pretty<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(CliError::json)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    std::fs::write(path, to_pretty(value)?).map_err(|e| CliError::io(path, e))
}
