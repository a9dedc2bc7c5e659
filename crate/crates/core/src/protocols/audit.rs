//! Privacy checks across the plans generated for every requested file.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Label, QueryPlan, Virtual};
use crate::field::{Field, Sym};
use crate::linalg::SpanSolver;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeVerdict {
    /// 1-based node index.
    pub node: usize,
    /// Same count of sums per (label, file signature) for every requested file,
    /// and no stored symbol used twice.
    pub combinatorial: bool,
    /// For plans with masks: offsets between requested files are absorbed by
    /// the masks. `None` when the plans carry no masks.
    pub distributional: Option<bool>,
    pub issues: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub pass: bool,
    pub nodes: Vec<NodeVerdict>,
}

impl PrivacyReport {
    /// 1-based indices of the nodes that fail either check.
    pub fn violating_nodes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|v| !v.combinatorial || v.distributional == Some(false))
            .map(|v| v.node)
            .collect()
    }
}

fn signature_name(sig: Option<u64>) -> String {
    match sig {
        None => "masked".into(),
        Some(s) => {
            let files: Vec<String> = (0..64)
                .filter(|m| s >> m & 1 == 1)
                .map(|m| (m + 1).to_string())
                .collect();
            format!("files {{{}}}", files.join(","))
        }
    }
}

/// Checks the plans generated for each requested file (one plan per file,
/// same parameters and seed).
pub fn audit_privacy(plans: &[QueryPlan], field: &Field) -> PrivacyReport {
    let Some(first) = plans.first() else {
        return PrivacyReport {
            pass: true,
            nodes: Vec::new(),
        };
    };
    let masked = plans.iter().any(|p| !p.masks.is_empty());
    let nodes: Vec<NodeVerdict> = (0..first.n)
        .map(|l| {
            let mut issues = Vec::new();
            let combinatorial = combinatorial_check(plans, l, &mut issues);
            let distributional = masked.then(|| distributional_check(plans, field, l, &mut issues));
            NodeVerdict {
                node: l + 1,
                combinatorial,
                distributional,
                issues,
            }
        })
        .collect();
    PrivacyReport {
        pass: nodes
            .iter()
            .all(|v| v.combinatorial && v.distributional != Some(false)),
        nodes,
    }
}

fn counts(plan: &QueryPlan, l: usize) -> BTreeMap<(Label, Option<u64>), usize> {
    let mut out = BTreeMap::new();
    for d in &plan.downloads[l] {
        *out.entry((d.label, plan.signature(d))).or_insert(0) += 1;
    }
    out
}

fn combinatorial_check(plans: &[QueryPlan], l: usize, issues: &mut Vec<String>) -> bool {
    let mut ok = true;
    let reference = counts(&plans[0], l);
    for p in &plans[1..] {
        let other = counts(p, l);
        let keys: std::collections::BTreeSet<_> = reference.keys().chain(other.keys()).collect();
        for key in keys {
            let (a, b) = (
                reference.get(key).copied().unwrap_or(0),
                other.get(key).copied().unwrap_or(0),
            );
            if a != b {
                ok = false;
                issues.push(format!(
                    "round {} (block {}, repetition {}), {}: {} sums for file {} but {} for file {}",
                    key.0.round,
                    key.0.block + 1,
                    key.0.rep + 1,
                    signature_name(key.1),
                    a,
                    plans[0].target + 1,
                    b,
                    p.target + 1
                ));
            }
        }
    }
    for p in plans {
        let mut seen = vec![false; p.files * p.beta];
        for d in &p.downloads[l] {
            for r in p.deterministic_rows(d) {
                if std::mem::replace(&mut seen[r], true) {
                    ok = false;
                    issues.push(format!(
                        "stored symbol of file {}, stripe {} used twice when requesting file {}",
                        r / p.beta + 1,
                        r % p.beta + 1,
                        p.target + 1
                    ));
                }
            }
        }
    }
    ok
}

/// Mask coefficients per download (rows) and mask (columns).
fn mask_matrix(plan: &QueryPlan, l: usize) -> Vec<Vec<Sym>> {
    plan.downloads[l]
        .iter()
        .map(|d| {
            let mut row = vec![0; plan.masks.len()];
            for t in &d.terms {
                if let Virtual::Mask(h) = t.v {
                    row[h] = t.coef;
                }
            }
            row
        })
        .collect()
}

/// Coefficients of the unmasked part over the stored symbols.
fn offsets(plan: &QueryPlan, field: &Field, l: usize) -> Vec<Vec<Sym>> {
    plan.downloads[l]
        .iter()
        .map(|d| {
            let mut acc = vec![0; plan.files * plan.beta];
            for t in d.terms.iter().filter(|t| !matches!(t.v, Virtual::Mask(_))) {
                plan.expand(field, t.v, t.coef, &mut acc);
            }
            acc
        })
        .collect()
}

/// A node sees `O + M·U` with `U` uniform; two requested files give the
/// same distribution when every column of the offset difference lies in
/// the column space of `M`.
fn distributional_check(
    plans: &[QueryPlan],
    field: &Field,
    l: usize,
    issues: &mut Vec<String>,
) -> bool {
    let reference = mask_matrix(&plans[0], l);
    let base = offsets(&plans[0], field, l);
    let sums = reference.len();
    let columns: Vec<Vec<Sym>> = (0..plans[0].masks.len())
        .map(|h| reference.iter().map(|row| row[h]).collect())
        .collect();
    let solver = SpanSolver::new(field, &columns, sums);
    let mut ok = true;
    for p in &plans[1..] {
        if mask_matrix(p, l) != reference {
            issues.push(format!(
                "mask pattern differs between files {} and {}",
                plans[0].target + 1,
                p.target + 1
            ));
            ok = false;
            continue;
        }
        let other = offsets(p, field, l);
        for r in 0..p.files * p.beta {
            let diff: Vec<Sym> = (0..sums)
                .map(|s| field.sub(other[s][r], base[s][r]))
                .collect();
            if diff.iter().any(|&x| x != 0) && solver.express(field, &diff).is_none() {
                issues.push(format!(
                    "stored symbol of file {}, stripe {} is exposed when requesting file {} instead of {}",
                    r / p.beta + 1,
                    r % p.beta + 1,
                    p.target + 1,
                    plans[0].target + 1
                ));
                ok = false;
            }
        }
    }
    ok
}
