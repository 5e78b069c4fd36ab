//! Diagram terms: expression trees over named generators, typed at
//! construction, evaluated against a binding table.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::process::{compose_par, compose_seq, convex_mix, LinearProcess};
use crate::scalar::{rational_to_string, Rational, Scalar};
use crate::system::Signature;

/// Named processes a term's leaves refer to.
pub type Bindings<S> = BTreeMap<String, LinearProcess<S>>;

/// Mixture weight, kept exact so terms print back the way they were written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Weight(Rational);

impl Weight {
    pub fn new(p: Rational) -> Result<Self> {
        if p.is_negative() || p > Rational::one() {
            return Err(Error::InvalidProbability(rational_to_string(&p)));
        }
        Ok(Weight(p))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }
}

impl fmt::Display for Weight {
    /// Terminating decimals print as decimals, everything else as `p/q`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.0;
        let mut den = r.denom().clone();
        let mut places = 0usize;
        let two = num_bigint::BigInt::from(2);
        let five = num_bigint::BigInt::from(5);
        let mut twos = 0usize;
        let mut fives = 0usize;
        while (&den % &two).is_zero() {
            den /= &two;
            twos += 1;
        }
        while (&den % &five).is_zero() {
            den /= &five;
            fives += 1;
        }
        if !den.is_one() {
            return write!(f, "{}", rational_to_string(r));
        }
        places += twos.max(fives);
        if places == 0 {
            return write!(f, "{}", r.numer());
        }
        let scaled = r * Rational::from_integer(num_traits::pow(num_bigint::BigInt::from(10), places));
        let digits = scaled.to_integer().abs().to_string();
        let digits = format!("{digits:0>width$}", width = places + 1);
        let (int, frac) = digits.split_at(digits.len() - places);
        let sign = if r.is_negative() { "-" } else { "" };
        write!(f, "{sign}{int}.{frac}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(String),
    Seq(Arc<DiagramTerm>, Arc<DiagramTerm>),
    Par(Arc<DiagramTerm>, Arc<DiagramTerm>),
    Mix(Weight, Arc<DiagramTerm>, Arc<DiagramTerm>),
}

/// A well-typed diagram. Every node records its inferred signature pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramTerm {
    node: Node,
    inputs: Signature,
    outputs: Signature,
}

impl DiagramTerm {
    /// Leaf typed from its binding.
    pub fn leaf<S: Scalar>(name: &str, bindings: &Bindings<S>) -> Result<Self> {
        let p = bindings.get(name).ok_or_else(|| Error::UnboundGenerator(name.to_string()))?;
        Ok(Self::leaf_typed(name, p.inputs().clone(), p.outputs().clone()))
    }

    pub fn leaf_typed(name: &str, inputs: Signature, outputs: Signature) -> Self {
        DiagramTerm { node: Node::Leaf(name.to_string()), inputs, outputs }
    }

    /// `first ; second` (apply `first`, then `second`).
    pub fn seq(first: DiagramTerm, second: DiagramTerm) -> Result<Self> {
        if first.outputs != second.inputs {
            return Err(Error::TypeMismatch {
                context: "sequential composition".into(),
                expected: second.inputs.to_string(),
                found: first.outputs.to_string(),
            });
        }
        Ok(DiagramTerm {
            inputs: first.inputs.clone(),
            outputs: second.outputs.clone(),
            node: Node::Seq(Arc::new(first), Arc::new(second)),
        })
    }

    pub fn par(left: DiagramTerm, right: DiagramTerm) -> Self {
        DiagramTerm {
            inputs: left.inputs.concat(&right.inputs),
            outputs: left.outputs.concat(&right.outputs),
            node: Node::Par(Arc::new(left), Arc::new(right)),
        }
    }

    pub fn mix(weight: Weight, a: DiagramTerm, b: DiagramTerm) -> Result<Self> {
        if a.inputs != b.inputs || a.outputs != b.outputs {
            return Err(Error::TypeMismatch {
                context: "convex mixture".into(),
                expected: format!("{} -> {}", a.inputs, a.outputs),
                found: format!("{} -> {}", b.inputs, b.outputs),
            });
        }
        Ok(DiagramTerm {
            inputs: a.inputs.clone(),
            outputs: a.outputs.clone(),
            node: Node::Mix(weight, Arc::new(a), Arc::new(b)),
        })
    }

    /// Folds a nonempty list with `;`.
    pub fn seq_all(terms: Vec<DiagramTerm>) -> Result<Self> {
        let mut it = terms.into_iter();
        let first = it.next().ok_or_else(|| Error::OutOfRange("empty sequence".into()))?;
        it.try_fold(first, DiagramTerm::seq)
    }

    /// Folds a nonempty list with `*`.
    pub fn par_all(terms: Vec<DiagramTerm>) -> Result<Self> {
        let mut it = terms.into_iter();
        let first = it.next().ok_or_else(|| Error::OutOfRange("empty parallel product".into()))?;
        Ok(it.fold(first, DiagramTerm::par))
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn inputs(&self) -> &Signature {
        &self.inputs
    }

    pub fn outputs(&self) -> &Signature {
        &self.outputs
    }

    /// Generator names used, in first-occurrence order.
    pub fn leaves(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<String>) {
        match &self.node {
            Node::Leaf(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Node::Seq(a, b) | Node::Par(a, b) | Node::Mix(_, a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    /// Number of generator occurrences.
    pub fn size(&self) -> usize {
        match &self.node {
            Node::Leaf(_) => 1,
            Node::Seq(a, b) | Node::Par(a, b) | Node::Mix(_, a, b) => a.size() + b.size(),
        }
    }
}

/// Binding strength used by the printer: `*` < `;` < atoms.
fn precedence(node: &Node) -> u8 {
    match node {
        Node::Par(..) => 1,
        Node::Seq(..) => 2,
        Node::Leaf(_) | Node::Mix(..) => 3,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, t: &DiagramTerm, min: u8) -> fmt::Result {
    if precedence(&t.node) < min {
        write!(f, "({t})")
    } else {
        write!(f, "{t}")
    }
}

impl fmt::Display for DiagramTerm {
    /// Minimal-parenthesis rendering in the process-expression grammar.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Leaf(n) => write!(f, "{n}"),
            Node::Seq(a, b) => {
                write_operand(f, a, 2)?;
                write!(f, " ; ")?;
                write_operand(f, b, 3)
            }
            Node::Par(a, b) => {
                write_operand(f, a, 1)?;
                write!(f, " * ")?;
                write_operand(f, b, 2)
            }
            Node::Mix(w, a, b) => write!(f, "mix({w}, {a}, {b})"),
        }
    }
}

/// Recursive evaluation via [`compose_seq`], [`compose_par`], [`convex_mix`].
pub fn eval_diagram<S: Scalar>(term: &DiagramTerm, bindings: &Bindings<S>) -> Result<LinearProcess<S>> {
    match &term.node {
        Node::Leaf(name) => {
            let p = bindings.get(name).ok_or_else(|| Error::UnboundGenerator(name.clone()))?;
            if p.inputs() != &term.inputs || p.outputs() != &term.outputs {
                return Err(Error::TypeMismatch {
                    context: format!("binding for `{name}`"),
                    expected: format!("{} -> {}", term.inputs, term.outputs),
                    found: format!("{} -> {}", p.inputs(), p.outputs()),
                });
            }
            Ok(p.clone())
        }
        Node::Seq(a, b) => compose_seq(&eval_diagram(a, bindings)?, &eval_diagram(b, bindings)?),
        Node::Par(a, b) => Ok(compose_par(&eval_diagram(a, bindings)?, &eval_diagram(b, bindings)?)),
        Node::Mix(w, a, b) => convex_mix(
            &S::from_rational(w.value()),
            &eval_diagram(a, bindings)?,
            &eval_diagram(b, bindings)?,
        ),
    }
}
