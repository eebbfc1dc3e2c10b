//! Node-indexed potential certificates.
//!
//! A certificate assigns every graph node a nonnegative potential. It is
//! accepted when, for every node and every available action, the expected
//! successor potential plus expected step cost does not exceed the node's
//! potential; terminal nodes must retain at least the postcondition
//! potential of the main value; stuck nodes refute the certificate; and
//! the initial node's potential must not exceed the claimed bound. On a
//! demonic graph this quantifies over every scheduler choice.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::PostPotential;
use crate::exec::ConfigGraph;
use crate::rat::{format_rat, is_nonneg, parse_rat, Rat};
use crate::syntax::{parse_program, pretty_val, Expr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PotentialCertificate {
    pub node_potentials: BTreeMap<usize, Rat>,
    pub claimed_bound: Rat,
    pub post: PostPotential,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertError {
    #[error("node {0} has no potential in the certificate")]
    MissingNodePotential(usize),
    #[error("node {node} has negative potential {value}")]
    NegativePotential { node: usize, value: String },
    #[error("malformed certificate: {0}")]
    Malformed(String),
}

/// One violated constraint, with both sides exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// `action`, `terminal`, `stuck`, or `bound`.
    pub kind: String,
    pub node: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thread: Option<usize>,
    /// Exact value that had to be at most `rhs`.
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub accepted: bool,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!(self)
    }
}

pub fn check_certificate(
    g: &ConfigGraph,
    cert: &PotentialCertificate,
) -> Result<CheckReport, CertError> {
    let phi = |node: usize| -> Result<&Rat, CertError> {
        cert.node_potentials
            .get(&node)
            .ok_or(CertError::MissingNodePotential(node))
    };
    for (&node, value) in &cert.node_potentials {
        if !is_nonneg(value) {
            return Err(CertError::NegativePotential { node, value: format_rat(value) });
        }
    }

    let mut violations = Vec::new();
    for (id, node) in g.nodes.iter().enumerate() {
        let here = phi(id)?.clone();
        if node.stuck {
            violations.push(Violation {
                kind: "stuck".into(),
                node: id,
                thread: None,
                lhs: "stuck configuration".into(),
                rhs: "progress".into(),
            });
        }
        if node.terminal {
            let v = node.threads[0].to_val().expect("terminal main thread is a value");
            let need = cert.post.eval(v);
            if *need > here {
                violations.push(Violation {
                    kind: "terminal".into(),
                    node: id,
                    thread: None,
                    lhs: format_rat(need),
                    rhs: format_rat(&here),
                });
            }
        }
        for action in &node.actions {
            let mut expected = Rat::zero();
            for ((to, cost), p) in action.edges.iter() {
                expected += p.as_rat() * (cost + phi(*to)?);
            }
            if expected > here {
                violations.push(Violation {
                    kind: "action".into(),
                    node: id,
                    thread: Some(action.thread),
                    lhs: format_rat(&expected),
                    rhs: format_rat(&here),
                });
            }
        }
    }
    let initial = phi(0)?;
    if *initial > cert.claimed_bound {
        violations.push(Violation {
            kind: "bound".into(),
            node: 0,
            thread: None,
            lhs: format_rat(initial),
            rhs: format_rat(&cert.claimed_bound),
        });
    }
    Ok(CheckReport { accepted: violations.is_empty(), violations })
}

/// On-disk certificate format:
/// `{"bound": "num/den", "post": [{"pattern": "...", "value": "num/den"}],
///   "default": "num/den", "nodes": {"<id>": "num/den"}}`.
/// Patterns are value literals in source syntax, matched exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CertFile {
    bound: String,
    #[serde(default)]
    post: Vec<CertPostCase>,
    #[serde(default = "zero_string")]
    default: String,
    nodes: BTreeMap<String, String>,
}

fn zero_string() -> String {
    "0".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CertPostCase {
    pattern: String,
    value: String,
}

impl PotentialCertificate {
    pub fn from_json(text: &str) -> Result<PotentialCertificate, CertError> {
        let file: CertFile =
            serde_json::from_str(text).map_err(|e| CertError::Malformed(e.to_string()))?;
        let bound =
            parse_rat(&file.bound).map_err(|e| CertError::Malformed(e.to_string()))?;
        let mut cases = Vec::new();
        for case in &file.post {
            let expr = parse_program(&case.pattern)
                .map_err(|e| CertError::Malformed(format!("bad pattern: {e}")))?;
            let Expr::Val(v) = expr else {
                return Err(CertError::Malformed(format!(
                    "pattern `{}` is not a value literal",
                    case.pattern
                )));
            };
            let value =
                parse_rat(&case.value).map_err(|e| CertError::Malformed(e.to_string()))?;
            cases.push((v, value));
        }
        let default =
            parse_rat(&file.default).map_err(|e| CertError::Malformed(e.to_string()))?;
        let post = PostPotential::new(cases, default).map_err(CertError::Malformed)?;
        let mut node_potentials = BTreeMap::new();
        for (k, v) in &file.nodes {
            let id: usize = k
                .parse()
                .map_err(|_| CertError::Malformed(format!("bad node id `{k}`")))?;
            let value = parse_rat(v).map_err(|e| CertError::Malformed(e.to_string()))?;
            node_potentials.insert(id, value);
        }
        Ok(PotentialCertificate { node_potentials, claimed_bound: bound, post })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let file = CertFile {
            bound: format_rat(&self.claimed_bound),
            post: self
                .post
                .cases()
                .iter()
                .map(|(v, r)| CertPostCase { pattern: pretty_val(v), value: format_rat(r) })
                .collect(),
            default: format_rat(self.post.default_value()),
            nodes: self
                .node_potentials
                .iter()
                .map(|(k, v)| (k.to_string(), format_rat(v)))
                .collect(),
        };
        json!(file)
    }
}
