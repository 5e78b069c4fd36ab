//! Typed wires and signatures.
//!
//! Composite indices are mixed-radix with the leftmost wire most
//! significant. Every Kronecker product and permutation in the crate uses
//! this convention.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Classical,
    Quantum,
    Extension,
}

/// Identity of an extension type: which registered channel and wing it
/// belongs to, plus a process-wide fresh serial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Brand {
    pub serial: u64,
    pub channel: u64,
    pub wing: usize,
}

static NEXT_BRAND: AtomicU64 = AtomicU64::new(1);

impl Brand {
    /// A brand that has never been handed out before in this process.
    pub fn fresh(channel: u64, wing: usize) -> Self {
        Brand { serial: NEXT_BRAND.fetch_add(1, Ordering::Relaxed), channel, wing }
    }

    /// Rebuilds a brand read back from a file. Bumps the fresh counter past
    /// `serial` so later fresh brands cannot collide with it.
    pub fn restore(serial: u64, channel: u64, wing: usize) -> Self {
        NEXT_BRAND.fetch_max(serial + 1, Ordering::Relaxed);
        Brand { serial, channel, wing }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemType {
    kind: Kind,
    /// Hilbert dimension for quantum, number of outcomes for classical,
    /// carrier dimension for extension types.
    dim: usize,
    brand: Option<Brand>,
}

impl SystemType {
    /// The unit system `I` (vdim 1). Classical and quantum constructors
    /// with dimension 1 both return it.
    pub const TRIVIAL: SystemType = SystemType { kind: Kind::Classical, dim: 1, brand: None };

    pub fn classical(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange("classical dimension must be positive".into()));
        }
        Ok(SystemType { kind: Kind::Classical, dim: n, brand: None })
    }

    pub fn quantum(d: usize) -> Result<Self> {
        match d {
            0 => Err(Error::OutOfRange("Hilbert dimension must be positive".into())),
            1 => Ok(Self::TRIVIAL),
            _ => Ok(SystemType { kind: Kind::Quantum, dim: d, brand: None }),
        }
    }

    pub fn extension(brand: Brand, carrier_dim: usize) -> Result<Self> {
        if carrier_dim == 0 {
            return Err(Error::OutOfRange("carrier dimension must be positive".into()));
        }
        Ok(SystemType { kind: Kind::Extension, dim: carrier_dim, brand: Some(brand) })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// Real vector-space dimension.
    pub fn vdim(&self) -> usize {
        match self.kind {
            Kind::Quantum => self.dim * self.dim,
            _ => self.dim,
        }
    }

    /// Hilbert dimension for quantum types, outcome count for classical.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn brand(&self) -> Option<Brand> {
        self.brand
    }

    pub fn is_trivial(&self) -> bool {
        self.vdim() == 1 && self.kind != Kind::Extension
    }

    pub fn is_classical(&self) -> bool {
        self.kind == Kind::Classical
    }

    pub fn is_quantum(&self) -> bool {
        self.kind == Kind::Quantum
    }

    pub fn is_extension(&self) -> bool {
        self.kind == Kind::Extension
    }

    /// Short identifier usable inside generator names (`c2`, `q2`, `x17`).
    pub fn tag(&self) -> String {
        match (self.kind, self.brand) {
            (Kind::Classical, _) => format!("c{}", self.dim),
            (Kind::Quantum, _) => format!("q{}", self.dim),
            (Kind::Extension, Some(b)) => format!("x{}", b.serial),
            (Kind::Extension, None) => unreachable!("extension types always carry a brand"),
        }
    }
}

impl fmt::Display for SystemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.brand) {
            (Kind::Classical, _) if self.dim == 1 => write!(f, "I"),
            (Kind::Classical, _) => write!(f, "C{}", self.dim),
            (Kind::Quantum, _) => write!(f, "Q{}", self.dim),
            (Kind::Extension, Some(b)) => {
                write!(f, "A[ch{} w{} #{}; {}]", b.channel, b.wing + 1, b.serial, self.dim)
            }
            (Kind::Extension, None) => write!(f, "A[?]"),
        }
    }
}

/// Ordered list of wires. The empty signature is the trivial system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Signature(Vec<SystemType>);

impl Signature {
    pub fn new(wires: Vec<SystemType>) -> Self {
        Signature(wires)
    }

    pub fn empty() -> Self {
        Signature(Vec::new())
    }

    pub fn wires(&self) -> &[SystemType] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.0.iter().map(SystemType::vdim).collect()
    }

    /// Product of vdims (1 for the empty signature).
    pub fn total_dim(&self) -> usize {
        self.0.iter().map(SystemType::vdim).product()
    }

    pub fn concat(&self, other: &Signature) -> Signature {
        Signature(self.0.iter().chain(&other.0).copied().collect())
    }

    /// Wires reordered so that position `j` holds wire `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Signature {
        Signature(perm.iter().map(|&p| self.0[p]).collect())
    }

    pub fn has_extension(&self) -> bool {
        self.0.iter().any(SystemType::is_extension)
    }
}

impl From<Vec<SystemType>> for Signature {
    fn from(v: Vec<SystemType>) -> Self {
        Signature(v)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "I");
        }
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(" ⊗ "))
    }
}

/// Splits a composite index into per-wire digits (leftmost most significant).
pub fn decode_index(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for (d, &n) in digits.iter_mut().zip(dims).rev() {
        *d = index % n;
        index /= n;
    }
    digits
}

pub fn encode_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

/// Checks that `perm` is a bijection on `0..n`.
pub fn validate_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidPermutation(perm.to_vec(), n));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidPermutation(perm.to_vec(), n));
        }
        seen[p] = true;
    }
    Ok(())
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (j, &p) in perm.iter().enumerate() {
        inv[p] = j;
    }
    inv
}
