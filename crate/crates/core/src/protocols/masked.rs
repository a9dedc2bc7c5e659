//! File-independent schemes: every download carries a fresh uniform mask,
//! so the query a node sees has the same distribution whichever file is
//! requested.
//!
//! Each rate-matrix row `u` owns `p_u` masks and `d_u` requested stripes.
//! A mask is downloaded in the clear on the row's support, which pins the
//! whole masked codeword. A requested stripe is downloaded on the same
//! support, each coordinate hidden under a mask owned by a row that skips
//! that node.

use std::collections::VecDeque;

use num_integer::Integer;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::file_dependent::part_record;
use super::{
    check_target, derive_seed, Block, Label, PlanBuilder, Protocol, ProtocolError, QueryPlan, Term,
    Virtual,
};
use crate::dss::CodedStore;
use crate::lambda::{InterferencePair, RateMatrix};

/// Work limit for the layout search before falling back to the uniform layout.
pub const LAYOUT_BUDGET: u64 = 2_000_000;

/// Masks and requested stripes per rate-matrix row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskLayout {
    pub masks: Vec<usize>,
    pub stripes: Vec<usize>,
}

impl MaskLayout {
    pub fn beta(&self) -> usize {
        self.stripes.iter().sum()
    }

    pub fn mask_count(&self) -> usize {
        self.masks.iter().sum()
    }

    /// Same masks and stripes on every row.
    pub fn uniform(lambda: &RateMatrix) -> Self {
        let (kappa, nu) = (lambda.kappa(), lambda.nu());
        let g = kappa.gcd(&(nu - kappa));
        MaskLayout {
            masks: vec![kappa / g; nu],
            stripes: vec![(nu - kappa) / g; nu],
        }
    }

    /// Every node's demand for masks equals its supply.
    pub fn is_balanced(&self, lambda: &RateMatrix) -> bool {
        (0..lambda.n()).all(|l| {
            let (mut demand, mut supply) = (0, 0);
            for u in 0..lambda.nu() {
                if lambda.get(u, l) {
                    demand += self.stripes[u];
                } else {
                    supply += self.masks[u];
                }
            }
            demand == supply
        })
    }
}

struct LayoutSearch<'a> {
    lambda: &'a RateMatrix,
    /// Total masks required so that `κβ = (ν − κ)·masks`.
    total: usize,
    work: u64,
}

impl LayoutSearch<'_> {
    /// Nonnegative masks per row meeting every node's demand exactly.
    fn masks_for(&mut self, demand: &[usize]) -> Option<Vec<usize>> {
        let (nu, n) = (self.lambda.nu(), self.lambda.n());
        let bound: Vec<usize> = (0..nu)
            .map(|u| {
                (0..n)
                    .filter(|&l| !self.lambda.get(u, l))
                    .map(|l| demand[l])
                    .min()
                    .unwrap_or(0)
            })
            .collect();
        let mut masks = vec![0; nu];
        let mut supply = vec![0; n];
        self.fill(0, &bound, demand, &mut masks, &mut supply)
            .then_some(masks)
    }

    fn fill(
        &mut self,
        u: usize,
        bound: &[usize],
        demand: &[usize],
        masks: &mut [usize],
        supply: &mut [usize],
    ) -> bool {
        self.work += 1;
        if self.work > LAYOUT_BUDGET {
            return false;
        }
        let (nu, n) = (self.lambda.nu(), self.lambda.n());
        if u == nu {
            return supply == demand && masks.iter().sum::<usize>() == self.total;
        }
        for p in 0..=bound[u] {
            let fits = (0..n).all(|l| self.lambda.get(u, l) || supply[l] + p <= demand[l]);
            if !fits {
                break;
            }
            for l in (0..n).filter(|&l| !self.lambda.get(u, l)) {
                supply[l] += p;
            }
            masks[u] = p;
            if self.fill(u + 1, bound, demand, masks, supply) {
                return true;
            }
            for l in (0..n).filter(|&l| !self.lambda.get(u, l)) {
                supply[l] -= p;
            }
        }
        masks[u] = 0;
        false
    }
}

/// Compositions of `total` into `parts` ordered parts, lexicographically descending.
fn compositions(
    total: usize,
    parts: usize,
    prefix: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if parts == 1 {
        prefix.push(total);
        let stop = visit(prefix);
        prefix.pop();
        return stop;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        let stop = compositions(total - first, parts - 1, prefix, visit);
        prefix.pop();
        if stop {
            return true;
        }
    }
    false
}

/// Balanced layout with the fewest stripes and `κβ = (ν − κ)·masks`, searching below the uniform
/// layout and falling back to it when the work limit is reached.
pub fn minimal_mask_layout(lambda: &RateMatrix) -> MaskLayout {
    let uniform = MaskLayout::uniform(lambda);
    let (kappa, gap) = (lambda.kappa(), lambda.nu() - lambda.kappa());
    let mut search = LayoutSearch {
        lambda,
        total: 0,
        work: 0,
    };
    for beta in 1..uniform.beta() {
        if kappa * beta % gap != 0 {
            continue;
        }
        search.total = kappa * beta / gap;
        let mut found = None;
        compositions(beta, lambda.nu(), &mut Vec::new(), &mut |stripes| {
            let demand: Vec<usize> = (0..lambda.n())
                .map(|l| {
                    (0..lambda.nu())
                        .filter(|&u| lambda.get(u, l))
                        .map(|u| stripes[u])
                        .sum()
                })
                .collect();
            if let Some(masks) = search.masks_for(&demand) {
                found = Some(MaskLayout {
                    masks,
                    stripes: stripes.to_vec(),
                });
                return true;
            }
            search.work > LAYOUT_BUDGET
        });
        if let Some(layout) = found {
            return layout;
        }
        if search.work > LAYOUT_BUDGET {
            break;
        }
    }
    uniform
}

/// Appends one run on `block` over the physical stripes `stripes`
/// (length = layout β). With `trim`, a row's downloads are confined to the
/// smallest information set inside its support.
#[allow(clippy::too_many_arguments)]
pub(crate) fn append_run(
    b: &mut PlanBuilder,
    block: &Block,
    layout: &MaskLayout,
    target: usize,
    stripes: &[usize],
    block_label: usize,
    trim: bool,
    rng: &mut ChaCha20Rng,
    field: &crate::field::Field,
) -> Result<(), ProtocolError> {
    let lambda = block.lambda;
    let (nu, local_n) = (lambda.nu(), block.code.n());
    if lambda.kappa() == nu {
        return Err(ProtocolError::NoGap);
    }
    if stripes.len() != layout.beta() {
        return Err(ProtocolError::StripeMismatch {
            expected: layout.beta(),
            got: stripes.len(),
        });
    }
    let pair = InterferencePair::build(lambda);
    let kept: Vec<u64> = (0..nu)
        .map(|u| {
            if trim {
                block
                    .code
                    .smallest_information_set_within(lambda.row_mask(u))
                    .expect("rate-matrix rows span")
                    .mask()
            } else {
                lambda.row_mask(u)
            }
        })
        .collect();
    let depth = b.files * b.beta;
    let mut owned: Vec<Vec<Virtual>> = vec![Vec::new(); nu];
    for u in 0..nu {
        for _ in 0..layout.masks[u] {
            let coefs = (0..depth).map(|_| field.sample(rng)).collect();
            b.masks.push(coefs);
            let h = Virtual::Mask(b.masks.len() - 1);
            owned[u].push(h);
            for l in (0..local_n).filter(|l| kept[u] >> l & 1 == 1) {
                let rep = pair.present_index(u, l).expect("row holds a one at l");
                b.push(
                    block.coords[l],
                    vec![Term { v: h, coef: 1 }],
                    Label {
                        block: block_label,
                        rep,
                        round: 0,
                    },
                );
            }
        }
    }
    let mut supply: Vec<VecDeque<Virtual>> = (0..local_n)
        .map(|l| {
            (0..nu)
                .filter(|&u| !lambda.get(u, l))
                .flat_map(|u| owned[u].clone())
                .collect()
        })
        .collect();
    let mut next = stripes.iter();
    for (u, (&count, &keep)) in layout.stripes.iter().zip(&kept).enumerate() {
        for _ in 0..count {
            let e = Virtual::Row(target * b.beta + next.next().expect("layout β stripes"));
            for l in (0..local_n).filter(|l| keep >> l & 1 == 1) {
                let h = supply[l].pop_front().expect("mask supply covers demand");
                let rep = pair.present_index(u, l).expect("row holds a one at l");
                b.push(
                    block.coords[l],
                    vec![Term { v: e, coef: 1 }, Term { v: h, coef: 1 }],
                    Label {
                        block: block_label,
                        rep,
                        round: 0,
                    },
                );
            }
        }
    }
    debug_assert!(trim || supply.iter().all(VecDeque::is_empty));
    Ok(())
}

/// Runs a layout `β / β_layout` times over consecutive stripe blocks.
#[allow(clippy::too_many_arguments)]
pub(crate) fn append_repeated(
    b: &mut PlanBuilder,
    block: &Block,
    layout: &MaskLayout,
    target: usize,
    part: usize,
    trim: bool,
    seed: u64,
    field: &crate::field::Field,
) -> Result<(), ProtocolError> {
    let minimal = layout.beta();
    if !b.beta.is_multiple_of(minimal) {
        return Err(ProtocolError::BetaNotMultiple {
            beta: b.beta,
            minimal,
        });
    }
    let repeats = b.beta / minimal;
    b.parts.push(part_record(block, minimal, repeats));
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, part as u64));
    for r in 0..repeats {
        let stripes: Vec<usize> = (r * minimal..(r + 1) * minimal).collect();
        append_run(b, block, layout, target, &stripes, r, trim, &mut rng, field)?;
    }
    Ok(())
}

fn plan(
    store: &CodedStore,
    lambda: &RateMatrix,
    target: usize,
    seed: u64,
    trim: bool,
) -> Result<QueryPlan, ProtocolError> {
    check_target(store, target)?;
    lambda.check_code(store.code())?;
    if lambda.kappa() == lambda.nu() {
        return Err(ProtocolError::NoGap);
    }
    let layout = minimal_mask_layout(lambda);
    let block = Block::whole(store.code(), lambda);
    let mut b = PlanBuilder::new(store);
    append_repeated(
        &mut b,
        &block,
        &layout,
        target,
        0,
        trim,
        seed,
        store.field(),
    )?;
    let protocol = if trim { Protocol::AInf } else { Protocol::P2 };
    Ok(b.finish(protocol, target, store.field().order()))
}

/// Symmetric file-independent plan. The store's `β` must be a multiple of
/// the minimal layout's stripe count.
pub fn plan_protocol2(
    store: &CodedStore,
    lambda: &RateMatrix,
    target: usize,
    seed: u64,
) -> Result<QueryPlan, ProtocolError> {
    plan(store, lambda, target, seed, false)
}

/// Asymmetric file-independent plan: downloads only on one information set
/// per rate-matrix row.
pub fn plan_protocol_a_inf(
    store: &CodedStore,
    lambda: &RateMatrix,
    target: usize,
    seed: u64,
) -> Result<QueryPlan, ProtocolError> {
    plan(store, lambda, target, seed, true)
}
