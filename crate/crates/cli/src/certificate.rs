//! Realization certificates.
//!
//! A certificate carries the non-signalling report, the quasi-mixture with
//! every frame member it uses written out, and the realization (`ξ` as a
//! sparse list over carrier digits, one `η` matrix per wing, the brand
//! table). Checking it needs nothing beyond the file and the channel.

use procgpt_core::decompose::{negativity, CommonCauseRealization, QuasiMixture};
use procgpt_core::{NsReport, Scalar};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::format::{entries, ArithmeticTag, ChannelFile, Entry, FileScalar, WingSpec, BASIS_CONVENTION, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SubsetRecord {
    /// Zero-based wing indices whose outputs are discarded.
    pub discarded: Vec<usize>,
    pub residual: Entry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NsRecord {
    pub verdict: bool,
    pub tolerance: f64,
    pub max_residual: Entry,
    pub subsets: Vec<SubsetRecord>,
}

impl NsRecord {
    pub fn from_report<S: FileScalar>(r: &NsReport<S>) -> Self {
        NsRecord {
            verdict: r.verdict,
            tolerance: r.tol,
            max_residual: r.max_residual().to_entry(),
            subsets: r
                .entries
                .iter()
                .map(|e| SubsetRecord { discarded: e.subset.clone(), residual: e.residual.to_entry() })
                .collect(),
        }
    }
}

/// One local channel, as its `vdim(out) × vdim(in)` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MemberRecord {
    /// Position in the wing's full frame.
    pub index: usize,
    pub label: String,
    pub matrix: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WingFrameRecord {
    pub wing: usize,
    pub frame_size: usize,
    pub members: Vec<MemberRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QuasiTermRecord {
    pub coeff: Entry,
    /// Frame index per wing.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QuasiRecord {
    pub mode: String,
    pub residual: Entry,
    pub coefficient_sum: Entry,
    pub negativity: Entry,
    pub terms: Vec<QuasiTermRecord>,
    pub frames: Vec<WingFrameRecord>,
}

impl QuasiRecord {
    pub fn from_mixture<S: FileScalar>(qm: &QuasiMixture<S>) -> Self {
        let frames = qm
            .frame
            .wings
            .iter()
            .enumerate()
            .map(|(i, wf)| {
                let mut used: Vec<usize> = qm.terms.iter().map(|t| t.indices[i]).collect();
                used.sort_unstable();
                used.dedup();
                WingFrameRecord {
                    wing: i,
                    frame_size: wf.len(),
                    members: used
                        .into_iter()
                        .map(|j| MemberRecord {
                            index: j,
                            label: wf.labels[j].clone(),
                            matrix: entries(wf.members[j].matrix().data()),
                        })
                        .collect(),
                }
            })
            .collect();
        QuasiRecord {
            mode: qm.mode.as_str().to_string(),
            residual: qm.residual.to_entry(),
            coefficient_sum: qm.coefficient_sum().to_entry(),
            negativity: negativity(qm).to_entry(),
            terms: qm
                .terms
                .iter()
                .map(|t| QuasiTermRecord { coeff: t.coeff.to_entry(), members: t.indices.clone() })
                .collect(),
            frames,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BrandRecord {
    pub wing: usize,
    pub serial: u64,
    pub carrier: usize,
    /// Carrier value `a` selects frame member `members[a]`.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct XiTermRecord {
    pub coeff: Entry,
    pub carrier: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RealizationRecord {
    pub channel_id: u64,
    pub brands: Vec<BrandRecord>,
    pub xi: Vec<XiTermRecord>,
    /// `η_i` row-major: `vdim(out)` rows, column `x·carrier + a`.
    pub etas: Vec<Vec<Entry>>,
}

impl RealizationRecord {
    pub fn from_realization<S: FileScalar>(r: &CommonCauseRealization<S>) -> Self {
        RealizationRecord {
            channel_id: r.channel,
            brands: r
                .brands
                .iter()
                .map(|b| BrandRecord {
                    wing: b.wing,
                    serial: b.ty.brand().map_or(0, |x| x.serial),
                    carrier: b.carrier(),
                    members: b.members.clone(),
                })
                .collect(),
            xi: r.xi_terms().into_iter().map(|(c, d)| XiTermRecord { coeff: c.to_entry(), carrier: d }).collect(),
            etas: r.etas.iter().map(|e| entries(e.matrix().data())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Residuals {
    pub decomposition: Entry,
    pub realization: Entry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CertificateFile {
    pub version: u32,
    pub arithmetic: ArithmeticTag,
    pub basis_convention: String,
    pub channel_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assemblage_digest: Option<String>,
    pub wings: Vec<WingSpec>,
    pub mode: String,
    pub tolerance: f64,
    pub ns_report: NsRecord,
    pub quasi_mixture: QuasiRecord,
    pub realization: RealizationRecord,
    pub residuals: Residuals,
}

impl CertificateFile {
    pub fn build<S: FileScalar>(
        channel: &ChannelFile,
        report: &NsReport<S>,
        qm: &QuasiMixture<S>,
        r: &CommonCauseRealization<S>,
        residual: &S,
        tol: f64,
    ) -> Result<Self, CliError> {
        if channel.arithmetic != S::TAG {
            return Err(CliError::input(format!("channel file is {}, pipeline ran in {}", channel.arithmetic, S::TAG)));
        }
        Ok(CertificateFile {
            version: FORMAT_VERSION,
            arithmetic: S::TAG,
            basis_convention: BASIS_CONVENTION.to_string(),
            channel_digest: channel.digest()?,
            assemblage_digest: None,
            wings: channel.wings.clone(),
            mode: qm.mode.as_str().to_string(),
            tolerance: if S::ARITHMETIC == procgpt_core::Arithmetic::Rational { 0.0 } else { tol },
            ns_report: NsRecord::from_report(report),
            quasi_mixture: QuasiRecord::from_mixture(qm),
            realization: RealizationRecord::from_realization(r),
            residuals: Residuals { decomposition: qm.residual.to_entry(), realization: residual.to_entry() },
        })
    }
}

/// Default tolerance for an arithmetic when none is configured.
pub fn default_tol(tag: ArithmeticTag) -> f64 {
    match tag {
        ArithmeticTag::Rational => <procgpt_core::Rational as Scalar>::default_tol(),
        ArithmeticTag::Float64 => <f64 as Scalar>::default_tol(),
    }
}
