//! End-to-end runs: generate files, plan, respond, recover and audit.

use serde::{Deserialize, Serialize};

use super::direct_sum::{plan_protocol_b, DirectSumSetup, Subprotocol};
use super::file_dependent::{plan_protocol1, plan_protocol_a};
use super::masked::{minimal_mask_layout, plan_protocol2, plan_protocol_a_inf};
use super::schedule::{schedule_plan, Schedule};
use super::{
    audit_privacy, collect_responses, derive_seed, recover, PartRecord, PrivacyReport, Protocol,
    ProtocolError, QueryPlan,
};
use crate::code::LinearCode;
use crate::dss::{encode_store, generate_files, CodedStore, NodeQuery, NodeResponse};
use crate::field::Sym;
use crate::lambda::{find_min_ratio, RateMatrix};
use crate::rates::{rate_asymmetric, rate_direct_sum, rate_symmetric, ratio, Files, Rational};

/// What a protocol needs besides the store.
#[derive(Debug, Clone)]
pub enum Setup {
    Rate(RateMatrix),
    DirectSum(DirectSumSetup),
    Schedule(Schedule),
}

/// A protocol ready to plan queries, with the stripe count it needs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub protocol: Protocol,
    pub setup: Setup,
    pub beta: usize,
}

impl Scenario {
    /// Picks the rate matrix with the smallest `κ/ν` (or the direct-sum
    /// parts) and the smallest admissible stripe count.
    pub fn prepare(
        code: &LinearCode,
        protocol: Protocol,
        files: usize,
        nu_max: usize,
        budget: u64,
    ) -> Result<Self, ProtocolError> {
        match protocol {
            Protocol::Schedule => Err(ProtocolError::Schedule(
                "schedule runs need a schedule file".into(),
            )),
            Protocol::BP1 | Protocol::BP2 => {
                let decomposition = code.direct_sum_decompose()?;
                let sub = if protocol == Protocol::BP1 {
                    Subprotocol::P1
                } else {
                    Subprotocol::P2
                };
                let setup = DirectSumSetup::prepare(&decomposition, sub, files, nu_max, budget)?;
                Ok(Scenario {
                    protocol,
                    beta: setup.beta,
                    setup: Setup::DirectSum(setup),
                })
            }
            _ => {
                let lambda = find_min_ratio(code, nu_max, budget)?.matrix;
                Self::with_rate_matrix(protocol, lambda, files)
            }
        }
    }

    pub fn with_rate_matrix(
        protocol: Protocol,
        lambda: RateMatrix,
        files: usize,
    ) -> Result<Self, ProtocolError> {
        if lambda.kappa() == lambda.nu() {
            return Err(ProtocolError::NoGap);
        }
        let beta = match protocol {
            Protocol::P1 | Protocol::A => lambda.nu().pow(files as u32),
            Protocol::P2 | Protocol::AInf => minimal_mask_layout(&lambda).beta(),
            _ => {
                return Err(ProtocolError::Schedule(format!(
                    "{protocol:?} does not run on a single rate matrix"
                )))
            }
        };
        Ok(Scenario {
            protocol,
            setup: Setup::Rate(lambda),
            beta,
        })
    }

    pub fn with_schedule(schedule: Schedule) -> Self {
        Scenario {
            protocol: Protocol::Schedule,
            beta: schedule.beta,
            setup: Setup::Schedule(schedule),
        }
    }

    pub fn plan(
        &self,
        store: &CodedStore,
        target: usize,
        seed: u64,
    ) -> Result<QueryPlan, ProtocolError> {
        match (&self.setup, self.protocol) {
            (Setup::Rate(l), Protocol::P1) => plan_protocol1(store, l, target, seed),
            (Setup::Rate(l), Protocol::A) => plan_protocol_a(store, l, target, seed),
            (Setup::Rate(l), Protocol::P2) => plan_protocol2(store, l, target, seed),
            (Setup::Rate(l), Protocol::AInf) => plan_protocol_a_inf(store, l, target, seed),
            (Setup::DirectSum(s), _) => plan_protocol_b(store, s, target, seed),
            (Setup::Schedule(s), _) => schedule_plan(store, s, target, seed),
            (Setup::Rate(_), p) => Err(ProtocolError::Schedule(format!(
                "{p:?} does not run on a single rate matrix"
            ))),
        }
    }

    /// Closed-form rate for `files` files; `None` for hand-written schedules.
    pub fn expected_rate(
        &self,
        code: &LinearCode,
        files: usize,
    ) -> Result<Option<Rational>, ProtocolError> {
        let f = Files::Finite(files as u32);
        let (k, n) = (code.k(), code.n());
        Ok(Some(match (&self.setup, self.protocol) {
            (Setup::Rate(l), Protocol::P1) => rate_symmetric(l.kappa(), l.nu(), k, n, f)?,
            (Setup::Rate(l), Protocol::A) => rate_asymmetric(l.kappa(), l.nu(), f)?,
            (Setup::Rate(l), Protocol::P2) => {
                rate_symmetric(l.kappa(), l.nu(), k, n, Files::Infinite)?
            }
            (Setup::Rate(l), Protocol::AInf) => {
                rate_asymmetric(l.kappa(), l.nu(), Files::Infinite)?
            }
            (Setup::DirectSum(s), p) => {
                let shapes: Vec<(usize, usize)> = s
                    .parts
                    .iter()
                    .map(|p| (p.part.code.n(), p.part.code.k()))
                    .collect();
                let files = if p == Protocol::BP1 {
                    f
                } else {
                    Files::Infinite
                };
                rate_direct_sum(&shapes, k, files)?
            }
            _ => return Ok(None),
        }))
    }
}

/// Generator and field of the code a run used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeRecord {
    pub q: u32,
    pub n: usize,
    pub k: usize,
    pub generator: Vec<Vec<Sym>>,
    pub hash: String,
}

/// Everything exchanged in one run, enough to replay it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub protocol: Protocol,
    pub code: CodeRecord,
    pub files: usize,
    pub beta: usize,
    /// Requested file, 1-based.
    pub target: usize,
    pub seed: u64,
    pub parts: Vec<PartRecord>,
    pub download: usize,
    pub download_per_node: Vec<usize>,
    #[serde(with = "crate::rates::rational_string")]
    pub rate: Rational,
    #[serde(with = "crate::rates::option_rational_string")]
    pub expected_rate: Option<Rational>,
    pub recovered: bool,
    pub privacy: PrivacyReport,
    pub queries: Vec<NodeQuery>,
    pub responses: Vec<NodeResponse>,
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(json: &str) -> Result<Self, ProtocolError> {
        serde_json::from_str(json).map_err(|e| ProtocolError::Transcript(e.to_string()))
    }

    pub fn rate_matches(&self) -> bool {
        self.expected_rate.as_ref().is_none_or(|r| *r == self.rate)
    }
}

/// Runs the scenario on freshly generated files. `target` is 0-based; the
/// privacy audit plans every possible target with the same seed.
pub fn run(
    code: &LinearCode,
    scenario: &Scenario,
    files: usize,
    target: usize,
    seed: u64,
) -> Result<Transcript, ProtocolError> {
    let field = code.field();
    let data = generate_files(
        files,
        scenario.beta,
        code.k(),
        field,
        derive_seed(seed, u64::MAX),
    )?;
    let store = encode_store(&data, code)?;
    let plans = (0..files)
        .map(|m| scenario.plan(&store, m, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let plan = plans.get(target).ok_or(ProtocolError::TargetOutOfRange {
        target: target + 1,
        files,
    })?;
    let responses = collect_responses(&store, plan)?;
    let recovered = match recover(code, plan, &responses) {
        Ok(m) => m == *data.file(target),
        Err(ProtocolError::Unrecoverable(_)) => false,
        Err(e) => return Err(e),
    };
    let privacy = audit_privacy(&plans, field);
    let download = plan.total_download();
    Ok(Transcript {
        protocol: scenario.protocol,
        code: CodeRecord {
            q: field.order(),
            n: code.n(),
            k: code.k(),
            generator: code.generator().to_rows(),
            hash: code.hash(),
        },
        files,
        beta: scenario.beta,
        target: target + 1,
        seed,
        parts: plan.parts.clone(),
        download,
        download_per_node: plan.download_per_node(),
        rate: ratio(scenario.beta * code.k(), download.max(1)),
        expected_rate: scenario.expected_rate(code, files)?,
        recovered,
        privacy,
        queries: plan.queries(field),
        responses,
    })
}
