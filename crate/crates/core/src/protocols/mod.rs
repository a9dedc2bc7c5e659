//! Retrieval protocols: query planning, response collection, recovery and
//! privacy auditing.
//!
//! Every protocol emits a [`QueryPlan`]: per node, a list of [`Download`]s,
//! each a linear combination of *virtual codewords*. A virtual codeword is a
//! stored stripe, a sum of stored stripes, or a uniformly random mask over
//! all stored stripes. Nodes only ever see the expanded coefficient vectors
//! ([`QueryPlan::queries`]); the structure is kept user-side for recovery.

mod audit;
mod direct_sum;
mod file_dependent;
mod masked;
mod schedule;
mod transcript;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{CodeError, LinearCode};
use crate::dss::{CodedStore, DssError, NodeQuery, NodeResponse};
use crate::field::{Field, Sym};
use crate::lambda::{LambdaError, RateMatrix};
use crate::linalg::{self, Matrix, SpanSolver};
use crate::rates::RateError;

pub use audit::{audit_privacy, NodeVerdict, PrivacyReport};
pub use direct_sum::{plan_protocol_b, DirectSumSetup, PartSetup, Subprotocol};
pub use file_dependent::{plan_protocol1, plan_protocol_a};
pub use masked::{minimal_mask_layout, plan_protocol2, plan_protocol_a_inf, MaskLayout};
pub use schedule::{schedule_plan, verify_schedule, Schedule, ScheduleTerm, ScheduleVerdict};
pub use transcript::{run, CodeRecord, Scenario, Setup, Transcript};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Dss(#[from] DssError),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error("protocol needs {expected} stripes per file, store has {got}")]
    StripeMismatch { expected: usize, got: usize },
    #[error("target file {target} outside [1, {files}]")]
    TargetOutOfRange { target: usize, files: usize },
    #[error("rate matrix has kappa = nu; no redundancy to exploit")]
    NoGap,
    #[error("part {part} ({coords}) is not capacity-achieving within the search limits")]
    PartNotCapacityAchieving { part: usize, coords: String },
    #[error("the code does not split as a direct sum")]
    Indecomposable,
    #[error("stripe count {beta} is not a multiple of the minimal {minimal}")]
    BetaNotMultiple { beta: usize, minimal: usize },
    #[error("responses do not match the plan: {0}")]
    ResponseMismatch(String),
    #[error("recovery failed: {0}")]
    Unrecoverable(String),
    #[error("schedule term at node {node}, sum {sum} cannot be computed by that node: {reason}")]
    UnresolvableTerm {
        node: usize,
        sum: usize,
        reason: String,
    },
    #[error("malformed schedule: {0}")]
    Schedule(String),
    #[error("malformed transcript: {0}")]
    Transcript(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// File-dependent symmetric scheme.
    P1,
    /// File-dependent scheme with redundant entries removed.
    A,
    /// File-independent symmetric scheme.
    P2,
    /// File-independent asymmetric scheme.
    AInf,
    /// Per-part composition with the file-dependent subprotocol.
    BP1,
    /// Per-part composition with the file-independent subprotocol.
    BP2,
    /// A hand-written schedule.
    Schedule,
}

impl Protocol {
    pub fn is_file_independent(self) -> bool {
        matches!(
            self,
            Protocol::P2 | Protocol::AInf | Protocol::BP2 | Protocol::Schedule
        )
    }
}

/// A codeword the user reasons about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Virtual {
    /// Stored row, `file · β + stripe`.
    Row(usize),
    /// Index into [`QueryPlan::composites`].
    Composite(usize),
    /// Index into [`QueryPlan::masks`].
    Mask(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub v: Virtual,
    pub coef: Sym,
}

/// Position of a download in the protocol's bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    /// Repetition block (composition of subprotocols).
    pub block: usize,
    /// Index of the rate-matrix row among those containing the node.
    pub rep: usize,
    /// Number of files touched by the deterministic part.
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Download {
    pub terms: Vec<Term>,
    pub label: Label,
}

/// Rate matrix used on one coordinate block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartRecord {
    /// Mother-code coordinates, 0-based.
    pub coords: Vec<usize>,
    pub kappa: usize,
    pub nu: usize,
    pub rate_rows: Vec<Vec<u8>>,
    pub stripes: usize,
    pub repeats: usize,
}

/// Stripe order drawn for one file in one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    pub part: usize,
    pub block: usize,
    pub file: usize,
    /// Physical stripe used for each logical stripe.
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub protocol: Protocol,
    /// Requested file, 0-based.
    pub target: usize,
    pub files: usize,
    pub beta: usize,
    pub n: usize,
    pub q: u32,
    /// Sums of stored rows with coefficients.
    pub composites: Vec<Vec<(usize, Sym)>>,
    /// Dense coefficient vectors over all `βf` stored rows.
    pub masks: Vec<Vec<Sym>>,
    /// Downloads per node.
    pub downloads: Vec<Vec<Download>>,
    pub parts: Vec<PartRecord>,
    pub permutations: Vec<Permutation>,
}

impl QueryPlan {
    pub fn total_download(&self) -> usize {
        self.downloads.iter().map(Vec::len).sum()
    }

    pub fn download_per_node(&self) -> Vec<usize> {
        self.downloads.iter().map(Vec::len).collect()
    }

    fn depth(&self) -> usize {
        self.files * self.beta
    }

    /// Expands a virtual codeword to its coefficients over stored rows.
    pub fn expand(&self, field: &Field, v: Virtual, coef: Sym, acc: &mut [Sym]) {
        match v {
            Virtual::Row(r) => acc[r] = field.add(acc[r], coef),
            Virtual::Composite(c) => {
                for &(r, x) in &self.composites[c] {
                    acc[r] = field.mul_add(acc[r], coef, x);
                }
            }
            Virtual::Mask(h) => {
                for (a, &x) in acc.iter_mut().zip(&self.masks[h]) {
                    *a = field.mul_add(*a, coef, x);
                }
            }
        }
    }

    pub fn coefficients(&self, field: &Field, d: &Download) -> Vec<Sym> {
        let mut acc = vec![0; self.depth()];
        for t in &d.terms {
            self.expand(field, t.v, t.coef, &mut acc);
        }
        acc
    }

    /// The only thing a node ever receives.
    pub fn queries(&self, field: &Field) -> Vec<NodeQuery> {
        self.downloads
            .iter()
            .enumerate()
            .map(|(node, ds)| NodeQuery {
                node,
                combinations: ds.iter().map(|d| self.coefficients(field, d)).collect(),
            })
            .collect()
    }

    /// Stored rows in the deterministic (unmasked) part of a download.
    pub fn deterministic_rows(&self, d: &Download) -> Vec<usize> {
        let mut rows: Vec<usize> = d
            .terms
            .iter()
            .flat_map(|t| match t.v {
                Virtual::Row(r) => vec![r],
                Virtual::Composite(c) => self.composites[c].iter().map(|&(r, _)| r).collect(),
                Virtual::Mask(_) => vec![],
            })
            .collect();
        rows.sort_unstable();
        rows
    }

    pub fn is_masked(&self, d: &Download) -> bool {
        d.terms.iter().any(|t| matches!(t.v, Virtual::Mask(_)))
    }

    /// Files touched by the unmasked part, as a bitmask; `None` when masked.
    pub fn signature(&self, d: &Download) -> Option<u64> {
        if self.is_masked(d) {
            return None;
        }
        Some(
            self.deterministic_rows(d)
                .iter()
                .fold(0u64, |s, r| s | 1 << (r / self.beta)),
        )
    }
}

/// Shared state while protocols append downloads to a plan.
pub(crate) struct PlanBuilder {
    pub files: usize,
    pub beta: usize,
    pub n: usize,
    pub composites: Vec<Vec<(usize, Sym)>>,
    pub masks: Vec<Vec<Sym>>,
    pub downloads: Vec<Vec<Download>>,
    pub parts: Vec<PartRecord>,
    pub permutations: Vec<Permutation>,
}

impl PlanBuilder {
    pub fn new(store: &CodedStore) -> Self {
        PlanBuilder {
            files: store.files(),
            beta: store.beta(),
            n: store.n(),
            composites: Vec::new(),
            masks: Vec::new(),
            downloads: vec![Vec::new(); store.n()],
            parts: Vec::new(),
            permutations: Vec::new(),
        }
    }

    pub fn composite(&mut self, rows: Vec<usize>) -> Virtual {
        self.composites
            .push(rows.into_iter().map(|r| (r, 1)).collect());
        Virtual::Composite(self.composites.len() - 1)
    }

    pub fn push(&mut self, node: usize, terms: Vec<Term>, label: Label) {
        self.downloads[node].push(Download { terms, label });
    }

    /// Sorts every node's downloads into an order that depends only on
    /// labels, file signatures and the (randomly permuted) stripe indices.
    pub fn finish(self, protocol: Protocol, target: usize, q: u32) -> QueryPlan {
        let mut plan = QueryPlan {
            protocol,
            target,
            files: self.files,
            beta: self.beta,
            n: self.n,
            q,
            composites: self.composites,
            masks: self.masks,
            downloads: self.downloads,
            parts: self.parts,
            permutations: self.permutations,
        };
        let mut downloads = std::mem::take(&mut plan.downloads);
        for ds in downloads.iter_mut() {
            let mut keyed: Vec<_> = ds
                .drain(..)
                .map(|d| {
                    let masks: Vec<usize> = d
                        .terms
                        .iter()
                        .filter_map(|t| match t.v {
                            Virtual::Mask(h) => Some(h),
                            _ => None,
                        })
                        .collect();
                    let key = match plan.signature(&d) {
                        Some(sig) => (d.label, 0, sig, plan.deterministic_rows(&d), masks),
                        None => (d.label, 1, 0, Vec::new(), masks),
                    };
                    (key, d)
                })
                .collect();
            keyed.sort_by(|a, b| a.0.cmp(&b.0));
            ds.extend(keyed.into_iter().map(|(_, d)| d));
        }
        plan.downloads = downloads;
        plan
    }
}

/// A protocol running on a block of coordinates, possibly the whole code.
pub(crate) struct Block<'a> {
    /// The code seen on the block (the punctured code for a part).
    pub code: &'a LinearCode,
    /// Mother-code node of each local coordinate.
    pub coords: Vec<usize>,
    pub lambda: &'a RateMatrix,
}

impl<'a> Block<'a> {
    pub fn whole(code: &'a LinearCode, lambda: &'a RateMatrix) -> Self {
        Block {
            code,
            coords: (0..code.n()).collect(),
            lambda,
        }
    }
}

pub(crate) fn check_target(store: &CodedStore, target: usize) -> Result<(), ProtocolError> {
    if target >= store.files() {
        return Err(ProtocolError::TargetOutOfRange {
            target: target + 1,
            files: store.files(),
        });
    }
    Ok(())
}

/// Deterministic seed for a sub-stream.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sends every node its query.
pub fn collect_responses(
    store: &CodedStore,
    plan: &QueryPlan,
) -> Result<Vec<NodeResponse>, ProtocolError> {
    plan.queries(store.field())
        .iter()
        .map(|q| crate::dss::node_respond(store, q).map_err(ProtocolError::from))
        .collect()
}

/// Reconstructs the requested file from the responses.
///
/// Values of virtual codewords are learned coordinate by coordinate: a
/// download with a single unknown term yields that term, and a coordinate
/// whose generator column lies in the span of already known coordinates is
/// interpolated. The requested stripes are finally decoded from an
/// information set.
pub fn recover(
    code: &LinearCode,
    plan: &QueryPlan,
    responses: &[NodeResponse],
) -> Result<Matrix, ProtocolError> {
    let field = code.field();
    if responses.len() != plan.n || code.n() != plan.n {
        return Err(ProtocolError::ResponseMismatch(format!(
            "{} responses for {} nodes",
            responses.len(),
            plan.n
        )));
    }
    for (l, r) in responses.iter().enumerate() {
        if r.node != l || r.values.len() != plan.downloads[l].len() {
            return Err(ProtocolError::ResponseMismatch(format!("node {}", l + 1)));
        }
    }
    let mut known: HashMap<Virtual, Vec<Option<Sym>>> = HashMap::new();
    for ds in &plan.downloads {
        for d in ds {
            for t in &d.terms {
                known.entry(t.v).or_insert_with(|| vec![None; plan.n]);
            }
        }
    }
    let targets: Vec<Virtual> = (0..plan.beta)
        .map(|i| Virtual::Row(plan.target * plan.beta + i))
        .collect();
    for t in &targets {
        known.entry(*t).or_insert_with(|| vec![None; plan.n]);
    }
    let mut order: Vec<Virtual> = known.keys().copied().collect();
    order.sort();
    let mut pending: Vec<(usize, usize)> = (0..plan.n)
        .flat_map(|l| (0..plan.downloads[l].len()).map(move |j| (l, j)))
        .collect();
    let mut span_cache: HashMap<u64, (Vec<usize>, SpanSolver)> = HashMap::new();
    let mut filled_masks: HashMap<Virtual, u64> = HashMap::new();
    loop {
        let mut progress = false;
        let mut still = Vec::with_capacity(pending.len());
        for &(l, j) in &pending {
            let d = &plan.downloads[l][j];
            let unknown: Vec<Term> = d
                .terms
                .iter()
                .filter(|t| t.coef != 0 && known[&t.v][l].is_none())
                .copied()
                .collect();
            match unknown.len() {
                0 => {}
                1 => {
                    let t = unknown[0];
                    let mut rest = responses[l].values[j];
                    for other in d.terms.iter().filter(|o| o.v != t.v) {
                        let v = known[&other.v][l].unwrap_or(0);
                        rest = field.sub(rest, field.mul(other.coef, v));
                    }
                    let value = field.div(rest, t.coef).expect("nonzero coefficient");
                    known.get_mut(&t.v).unwrap()[l] = Some(value);
                    progress = true;
                }
                _ => still.push((l, j)),
            }
        }
        pending = still;
        for v in &order {
            let values = &known[v];
            let mask =
                values
                    .iter()
                    .enumerate()
                    .fold(0u64, |m, (l, x)| if x.is_some() { m | 1 << l } else { m });
            if mask == 0
                || filled_masks.get(v) == Some(&mask)
                || mask.count_ones() as usize == plan.n
            {
                continue;
            }
            filled_masks.insert(*v, mask);
            let (coords, solver) = span_cache
                .entry(mask)
                .or_insert_with(|| code.column_solver(mask));
            let mut updates = Vec::new();
            for l in (0..plan.n).filter(|l| mask >> l & 1 == 0) {
                if let Some(t) = solver.express(field, &code.column(l)) {
                    let value = coords
                        .iter()
                        .zip(&t)
                        .fold(0, |acc, (&c, &x)| field.mul_add(acc, x, values[c].unwrap()));
                    updates.push((l, value));
                }
            }
            if !updates.is_empty() {
                progress = true;
                let slot = known.get_mut(v).unwrap();
                for (l, value) in updates {
                    slot[l] = Some(value);
                }
            }
        }
        if !progress {
            break;
        }
    }
    decode_targets(code, plan, &known, &targets)
}

fn decode_targets(
    code: &LinearCode,
    plan: &QueryPlan,
    known: &HashMap<Virtual, Vec<Option<Sym>>>,
    targets: &[Virtual],
) -> Result<Matrix, ProtocolError> {
    let field = code.field();
    let mut out = Matrix::zeros(plan.beta, code.k());
    let mut inverses: HashMap<u64, (Vec<usize>, Matrix)> = HashMap::new();
    for (i, t) in targets.iter().enumerate() {
        let values = &known[t];
        let mask = values
            .iter()
            .enumerate()
            .fold(0u64, |m, (l, x)| if x.is_some() { m | 1 << l } else { m });
        let entry = match inverses.get(&mask) {
            Some(e) => e,
            None => {
                let info = code.smallest_information_set_within(mask).ok_or_else(|| {
                    ProtocolError::Unrecoverable(format!(
                        "stripe {} known only on coordinates {}",
                        i + 1,
                        crate::code::CoordSet::from_mask(mask)
                    ))
                })?;
                let sub = code.generator().select_columns(info.indices());
                let inv = linalg::invert(field, &sub).expect("information set is invertible");
                inverses
                    .entry(mask)
                    .or_insert((info.indices().to_vec(), inv))
            }
        };
        let restricted: Vec<Sym> = entry.0.iter().map(|&l| values[l].unwrap()).collect();
        out.row_mut(i)
            .copy_from_slice(&entry.1.left_mul(field, &restricted));
    }
    Ok(out)
}
