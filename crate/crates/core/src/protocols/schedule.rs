//! Hand-written download schedules over interference symbols.
//!
//! Interference symbol `j` (1-based) is coordinate `h' = (j−1) mod k` of
//! mask `h = ⌊(j−1)/k⌋`, where a mask is a uniformly random combination of
//! every stored stripe. A node can return a sum of interference symbols
//! only if, per mask, the coefficients form a multiple of the node's
//! generator column; it can return a requested symbol `x_{i,h'}` only if it
//! stores a multiple of it.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, Label, PlanBuilder, Protocol, ProtocolError, QueryPlan, Term, Virtual};
use crate::code::LinearCode;
use crate::dss::CodedStore;
use crate::field::{Field, Sym};
use crate::linalg::SpanSolver;
use crate::rates::{ratio, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleTerm {
    /// Interference symbol, 1-based.
    Interference {
        index: usize,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        coef: Sym,
    },
    /// Symbol `coord` of stripe `stripe` of the requested file, both 1-based.
    Desired {
        stripe: usize,
        coord: usize,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        coef: Sym,
    },
    /// The node's stored symbol for a fixed file and stripe, both 1-based.
    Stored {
        file: usize,
        stripe: usize,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        coef: Sym,
    },
}

fn one() -> Sym {
    1
}

fn is_one(c: &Sym) -> bool {
    *c == 1
}

/// Per node (in coordinate order), the list of sums it returns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Stripes per file.
    pub beta: usize,
    pub nodes: Vec<Vec<Vec<ScheduleTerm>>>,
}

impl Schedule {
    pub fn from_json(json: &str) -> Result<Self, ProtocolError> {
        serde_json::from_str(json).map_err(|e| ProtocolError::Schedule(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn download(&self) -> usize {
        self.nodes.iter().map(Vec::len).sum()
    }

    /// Without the `sum`-th sum (0-based) of node `node` (0-based).
    pub fn without(&self, node: usize, sum: usize) -> Self {
        let mut s = self.clone();
        s.nodes[node].remove(sum);
        s
    }

    /// Downloads every stored symbol of every file.
    pub fn download_everything(n: usize, files: usize, beta: usize) -> Self {
        Schedule {
            description: None,
            beta,
            nodes: (0..n)
                .map(|_| {
                    (0..files)
                        .flat_map(|m| {
                            (0..beta).map(move |i| {
                                vec![ScheduleTerm::Stored {
                                    file: m + 1,
                                    stripe: i + 1,
                                    coef: 1,
                                }]
                            })
                        })
                        .collect()
                })
                .collect(),
        }
    }

    fn mask_count(&self, k: usize) -> usize {
        self.nodes
            .iter()
            .flatten()
            .flatten()
            .filter_map(|t| match t {
                ScheduleTerm::Interference { index, .. } => Some((index - 1) / k + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    fn resolve(
        &self,
        code: &LinearCode,
        files: usize,
    ) -> Result<Vec<Vec<Resolved>>, ProtocolError> {
        if self.nodes.len() != code.n() {
            return Err(ProtocolError::Schedule(format!(
                "{} node entries for a code of length {}",
                self.nodes.len(),
                code.n()
            )));
        }
        if self.beta == 0 {
            return Err(ProtocolError::Schedule("beta must be positive".into()));
        }
        let masks = self.mask_count(code.k());
        self.nodes
            .iter()
            .enumerate()
            .map(|(l, sums)| {
                sums.iter()
                    .enumerate()
                    .map(|(s, terms)| resolve_sum(code, files, self.beta, masks, l, s, terms))
                    .collect()
            })
            .collect()
    }
}

/// One sum as seen by the user.
#[derive(Debug, Clone)]
struct Resolved {
    /// (mask, multiple of the node's generator column)
    masks: Vec<(usize, Sym)>,
    /// (stripe, coord, coefficient on x_{stripe, coord}) of the requested file
    desired: Vec<(usize, usize, Sym)>,
    /// (stripe, coefficient on the node's stored symbol) of the requested file
    desired_stored: Vec<(usize, Sym)>,
    /// (file, stripe, coefficient) fixed stored symbols
    stored: Vec<(usize, usize, Sym)>,
}

fn resolve_sum(
    code: &LinearCode,
    files: usize,
    beta: usize,
    masks: usize,
    l: usize,
    s: usize,
    terms: &[ScheduleTerm],
) -> Result<Resolved, ProtocolError> {
    let field = code.field();
    let k = code.k();
    let column = code.column(l);
    let fail = |reason: String| ProtocolError::UnresolvableTerm {
        node: l + 1,
        sum: s + 1,
        reason,
    };
    let mut per_mask = vec![vec![0 as Sym; k]; masks];
    let mut out = Resolved {
        masks: Vec::new(),
        desired: Vec::new(),
        desired_stored: Vec::new(),
        stored: Vec::new(),
    };
    for t in terms {
        match *t {
            ScheduleTerm::Interference { index, coef } => {
                if index == 0 {
                    return Err(fail("interference symbols are 1-based".into()));
                }
                let (h, c) = ((index - 1) / k, (index - 1) % k);
                per_mask[h][c] = field.add(per_mask[h][c], coef);
            }
            ScheduleTerm::Desired {
                stripe,
                coord,
                coef,
            } => {
                if stripe == 0 || stripe > beta || coord == 0 || coord > k {
                    return Err(fail(format!("x_{{{stripe},{coord}}} out of range")));
                }
                let scale = column[coord - 1];
                let only = column
                    .iter()
                    .enumerate()
                    .all(|(h, &g)| h == coord - 1 || g == 0);
                if scale == 0 || !only {
                    return Err(fail(format!(
                        "node does not store a multiple of x_{{{stripe},{coord}}}"
                    )));
                }
                out.desired.push((stripe - 1, coord - 1, coef));
                out.desired_stored
                    .push((stripe - 1, field.div(coef, scale).expect("nonzero")));
            }
            ScheduleTerm::Stored { file, stripe, coef } => {
                if file == 0 || file > files || stripe == 0 || stripe > beta {
                    return Err(fail(format!(
                        "stored symbol ({file}, {stripe}) out of range"
                    )));
                }
                out.stored.push((file - 1, stripe - 1, coef));
            }
        }
    }
    for (h, v) in per_mask.into_iter().enumerate() {
        if v.iter().all(|&x| x == 0) {
            continue;
        }
        let Some(p) = column.iter().position(|&g| g != 0) else {
            return Err(fail("node stores only zeros".into()));
        };
        let alpha = field.div(v[p], column[p]).expect("nonzero");
        if column
            .iter()
            .zip(&v)
            .any(|(&g, &x)| field.mul(alpha, g) != x)
        {
            return Err(fail(format!(
                "interference coefficients of mask {} are not a multiple of the node's column",
                h + 1
            )));
        }
        out.masks.push((h, alpha));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleVerdict {
    pub recoverable: bool,
    pub private: bool,
    pub download: usize,
    #[serde(with = "crate::rates::rational_string")]
    pub rate: Rational,
    /// Requested symbols `(stripe, coord)`, 1-based, not determined by the downloads.
    pub undetermined: Vec<(usize, usize)>,
    /// Nodes whose query distribution depends on the requested file, 1-based.
    pub leaking_nodes: Vec<usize>,
}

/// Checks that the schedule determines every requested symbol and that each
/// node's query distribution is the same for every requested file.
pub fn verify_schedule(
    code: &LinearCode,
    schedule: &Schedule,
    files: usize,
) -> Result<ScheduleVerdict, ProtocolError> {
    let field = code.field();
    let resolved = schedule.resolve(code, files)?;
    let (k, beta) = (code.k(), schedule.beta);
    let masks = schedule.mask_count(k);
    let undetermined = (0..files)
        .flat_map(|m| undetermined_symbols(code, &resolved, masks, beta, files, m))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect::<Vec<_>>();
    let leaking_nodes = (0..code.n())
        .filter(|&l| !node_is_private(field, &resolved[l], masks, beta, files))
        .map(|l| l + 1)
        .collect::<Vec<_>>();
    let download = schedule.download();
    Ok(ScheduleVerdict {
        recoverable: undetermined.is_empty(),
        private: leaking_nodes.is_empty(),
        download,
        rate: ratio(beta * k, download.max(1)),
        undetermined,
        leaking_nodes,
    })
}

/// Unknowns: all interference symbols, then every file symbol `x^{(m')}_{i,h'}`.
fn undetermined_symbols(
    code: &LinearCode,
    resolved: &[Vec<Resolved>],
    masks: usize,
    beta: usize,
    files: usize,
    target: usize,
) -> Vec<(usize, usize)> {
    let field = code.field();
    let k = code.k();
    let dim = masks * k + files * beta * k;
    let file_var = |m: usize, i: usize, h: usize| masks * k + (m * beta + i) * k + h;
    let mut rows = Vec::new();
    for (l, sums) in resolved.iter().enumerate() {
        let column = code.column(l);
        for r in sums {
            let mut row = vec![0 as Sym; dim];
            for &(h, alpha) in &r.masks {
                for (c, &g) in column.iter().enumerate() {
                    row[h * k + c] = field.mul_add(row[h * k + c], alpha, g);
                }
            }
            for &(i, c, coef) in &r.desired {
                let v = file_var(target, i, c);
                row[v] = field.add(row[v], coef);
            }
            for &(m, i, coef) in &r.stored {
                for (c, &g) in column.iter().enumerate() {
                    let v = file_var(m, i, c);
                    row[v] = field.mul_add(row[v], coef, g);
                }
            }
            rows.push(row);
        }
    }
    let solver = SpanSolver::new(field, &rows, dim);
    let mut missing = Vec::new();
    for i in 0..beta {
        for c in 0..k {
            let mut e = vec![0; dim];
            e[file_var(target, i, c)] = 1;
            if solver.express(field, &e).is_none() {
                missing.push((i + 1, c + 1));
            }
        }
    }
    missing
}

/// Every difference of deterministic offsets between requested files lies
/// in the column space of the node's mask matrix.
fn node_is_private(
    field: &Field,
    sums: &[Resolved],
    masks: usize,
    beta: usize,
    files: usize,
) -> bool {
    let columns: Vec<Vec<Sym>> = (0..masks)
        .map(|h| {
            sums.iter()
                .map(|r| {
                    r.masks
                        .iter()
                        .find(|&&(g, _)| g == h)
                        .map_or(0, |&(_, a)| a)
                })
                .collect()
        })
        .collect();
    let solver = SpanSolver::new(field, &columns, sums.len());
    let offset = |m: usize, row: usize| -> Vec<Sym> {
        sums.iter()
            .map(|r| {
                let mut v = 0;
                for &(i, c) in &r.desired_stored {
                    if m * beta + i == row {
                        v = field.add(v, c);
                    }
                }
                for &(f, i, c) in &r.stored {
                    if f * beta + i == row {
                        v = field.add(v, c);
                    }
                }
                v
            })
            .collect()
    };
    (1..files).all(|m| {
        (0..files * beta).all(|row| {
            let diff: Vec<Sym> = offset(m, row)
                .iter()
                .zip(offset(0, row))
                .map(|(&a, b)| field.sub(a, b))
                .collect();
            diff.iter().all(|&x| x == 0) || solver.express(field, &diff).is_some()
        })
    })
}

/// Turns a schedule into a concrete plan with freshly drawn masks.
pub fn schedule_plan(
    store: &CodedStore,
    schedule: &Schedule,
    target: usize,
    seed: u64,
) -> Result<QueryPlan, ProtocolError> {
    super::check_target(store, target)?;
    if schedule.beta != store.beta() {
        return Err(ProtocolError::StripeMismatch {
            expected: schedule.beta,
            got: store.beta(),
        });
    }
    let code = store.code();
    let field = store.field();
    let resolved = schedule.resolve(code, store.files())?;
    let mut b = PlanBuilder::new(store);
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, 0));
    for _ in 0..schedule.mask_count(code.k()) {
        let coefs = (0..store.depth()).map(|_| field.sample(&mut rng)).collect();
        b.masks.push(coefs);
    }
    for (l, sums) in resolved.iter().enumerate() {
        for (s, r) in sums.iter().enumerate() {
            let mut terms: Vec<Term> = r
                .masks
                .iter()
                .map(|&(h, alpha)| Term {
                    v: Virtual::Mask(h),
                    coef: alpha,
                })
                .collect();
            terms.extend(r.desired_stored.iter().map(|&(i, c)| Term {
                v: Virtual::Row(store.row_index(target, i)),
                coef: c,
            }));
            terms.extend(r.stored.iter().map(|&(m, i, c)| Term {
                v: Virtual::Row(store.row_index(m, i)),
                coef: c,
            }));
            b.push(
                l,
                terms,
                Label {
                    block: 0,
                    rep: s,
                    round: 0,
                },
            );
        }
    }
    Ok(b.finish(Protocol::Schedule, target, field.order()))
}
