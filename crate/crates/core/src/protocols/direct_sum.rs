//! Composition over a direct-sum decomposition: each part runs its own
//! capacity-achieving scheme on its coordinates, repeated until all parts
//! cover the same number of stripes.

use num_integer::Integer;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::file_dependent::{self, part_record};
use super::masked::{self, minimal_mask_layout, MaskLayout};
use super::{check_target, derive_seed, Block, PlanBuilder, Protocol, ProtocolError, QueryPlan};
use crate::code::{Decomposition, Punctured};
use crate::dss::CodedStore;
use crate::lambda::{is_capacity_achieving, CapacityVerdict, RateMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subprotocol {
    P1,
    P2,
}

/// Per-part rate matrices and stripe counts for a composition.
#[derive(Debug, Clone)]
pub struct DirectSumSetup {
    pub subprotocol: Subprotocol,
    pub parts: Vec<PartSetup>,
    /// Least common multiple of the part stripe counts.
    pub beta: usize,
}

#[derive(Debug, Clone)]
pub struct PartSetup {
    pub part: Punctured,
    pub lambda: RateMatrix,
    pub layout: Option<MaskLayout>,
    pub beta: usize,
}

impl DirectSumSetup {
    /// Certifies every part as capacity-achieving and fixes its stripe count.
    pub fn prepare(
        decomposition: &Decomposition,
        subprotocol: Subprotocol,
        files: usize,
        nu_max: usize,
        budget: u64,
    ) -> Result<Self, ProtocolError> {
        let mut parts = Vec::new();
        for (i, part) in decomposition.parts.iter().enumerate() {
            let lambda = match is_capacity_achieving(&part.code, nu_max, budget)? {
                CapacityVerdict::Yes(m) => m,
                _ if decomposition.is_trivial() => return Err(ProtocolError::Indecomposable),
                _ => {
                    return Err(ProtocolError::PartNotCapacityAchieving {
                        part: i + 1,
                        coords: part.coords.to_string(),
                    })
                }
            };
            if lambda.kappa() == lambda.nu() {
                return Err(ProtocolError::NoGap);
            }
            let (layout, beta) = match subprotocol {
                Subprotocol::P1 => (None, lambda.nu().pow(files as u32)),
                Subprotocol::P2 => {
                    let layout = minimal_mask_layout(&lambda);
                    let beta = layout.beta();
                    (Some(layout), beta)
                }
            };
            parts.push(PartSetup {
                part: part.clone(),
                lambda,
                layout,
                beta,
            });
        }
        let beta = parts.iter().fold(1, |acc, p| acc.lcm(&p.beta));
        Ok(DirectSumSetup {
            subprotocol,
            parts,
            beta,
        })
    }
}

/// Composed plan; the store must hold exactly `setup.beta` stripes per file.
pub fn plan_protocol_b(
    store: &CodedStore,
    setup: &DirectSumSetup,
    target: usize,
    seed: u64,
) -> Result<QueryPlan, ProtocolError> {
    check_target(store, target)?;
    if store.beta() != setup.beta {
        return Err(ProtocolError::StripeMismatch {
            expected: setup.beta,
            got: store.beta(),
        });
    }
    let mut b = PlanBuilder::new(store);
    for (index, p) in setup.parts.iter().enumerate() {
        let block = Block {
            code: &p.part.code,
            coords: p.part.coords.indices().to_vec(),
            lambda: &p.lambda,
        };
        match setup.subprotocol {
            Subprotocol::P1 => {
                let repeats = setup.beta / p.beta;
                b.parts.push(part_record(&block, p.beta, repeats));
                let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, index as u64));
                for r in 0..repeats {
                    let stripes: Vec<usize> = (r * p.beta..(r + 1) * p.beta).collect();
                    file_dependent::append_run(
                        &mut b, &block, target, &stripes, r, index, false, &mut rng,
                    )?;
                }
            }
            Subprotocol::P2 => {
                let layout = p.layout.as_ref().expect("layout fixed for P2");
                masked::append_repeated(
                    &mut b,
                    &block,
                    layout,
                    target,
                    index,
                    false,
                    seed,
                    store.field(),
                )?;
            }
        }
    }
    let protocol = match setup.subprotocol {
        Subprotocol::P1 => Protocol::BP1,
        Subprotocol::P2 => Protocol::BP2,
    };
    Ok(b.finish(protocol, target, store.field().order()))
}
