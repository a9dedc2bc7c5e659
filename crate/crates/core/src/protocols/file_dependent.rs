//! File-dependent schemes: every download is a plain sum of stored stripes,
//! and privacy comes from per-file random stripe permutations together with
//! identical per-node counts of every file combination.

use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{
    check_target, derive_seed, Block, Label, PartRecord, Permutation, PlanBuilder, Protocol,
    ProtocolError, QueryPlan, Term, Virtual,
};
use crate::dss::CodedStore;
use crate::lambda::{InterferencePair, RateMatrix};

/// Nonempty subsets of `files`, by size then bitmask.
fn subsets(files: &[usize]) -> Vec<u64> {
    let mut out: Vec<u64> = (1u64..1 << files.len())
        .map(|sel| {
            files
                .iter()
                .enumerate()
                .filter(|(i, _)| sel >> i & 1 == 1)
                .fold(0u64, |m, (_, &f)| m | 1 << f)
        })
        .collect();
    out.sort_by_key(|m| (m.count_ones(), *m));
    out
}

fn pow(base: usize, exp: usize) -> usize {
    base.pow(exp as u32)
}

/// Appends one run of the file-dependent scheme on `block` using the
/// physical stripes `stripes` (length `ν^f`) of every file.
///
/// With `trim`, each rate-matrix row only keeps the downloads at the
/// smallest information set inside its support.
#[allow(clippy::too_many_arguments)]
pub(crate) fn append_run(
    b: &mut PlanBuilder,
    block: &Block,
    target: usize,
    stripes: &[usize],
    block_label: usize,
    part: usize,
    trim: bool,
    rng: &mut ChaCha20Rng,
) -> Result<(), ProtocolError> {
    let (kappa, nu, f) = (block.lambda.kappa(), block.lambda.nu(), b.files);
    if kappa == nu {
        return Err(ProtocolError::NoGap);
    }
    let needed = pow(nu, f);
    if stripes.len() != needed {
        return Err(ProtocolError::StripeMismatch {
            expected: needed,
            got: stripes.len(),
        });
    }
    let gap = nu - kappa;
    let pair = InterferencePair::build(block.lambda);
    let local_n = block.code.n();
    let supports: Vec<Vec<usize>> = (0..nu)
        .map(|u| (0..local_n).filter(|&l| block.lambda.get(u, l)).collect())
        .collect();
    let kept: Vec<u64> = (0..nu)
        .map(|u| {
            if trim {
                block
                    .code
                    .smallest_information_set_within(block.lambda.row_mask(u))
                    .expect("rate-matrix rows span")
                    .mask()
            } else {
                block.lambda.row_mask(u)
            }
        })
        .collect();

    let orders: Vec<Vec<usize>> = (0..f)
        .map(|file| {
            let mut order = stripes.to_vec();
            order.shuffle(rng);
            b.permutations.push(Permutation {
                part,
                block: block_label,
                file,
                order: order.clone(),
            });
            order
        })
        .collect();
    let mut next = vec![0usize; f];
    let beta = b.beta;
    let mut take = |file: usize| {
        let row = file * beta + orders[file][next[file]];
        next[file] += 1;
        row
    };

    let others: Vec<usize> = (0..f).filter(|&m| m != target).collect();
    let sets = subsets(&others);
    // undesired sums per (row, file set), each downloaded across the row's support
    let mut undesired: HashMap<(usize, u64), Vec<Virtual>> = HashMap::new();
    for u in 0..nu {
        for &set in &sets {
            let t = set.count_ones() as usize;
            let count = pow(kappa, f - t) * pow(gap, t - 1);
            for _ in 0..count {
                let rows = (0..f)
                    .filter(|m| set >> m & 1 == 1)
                    .map(&mut take)
                    .collect();
                let z = b.composite(rows);
                undesired.entry((u, set)).or_default().push(z);
                for &l in &supports[u] {
                    if kept[u] >> l & 1 == 1 {
                        let rep = pair.present_index(u, l).expect("row holds a one at l");
                        b.push(
                            block.coords[l],
                            vec![Term { v: z, coef: 1 }],
                            Label {
                                block: block_label,
                                rep,
                                round: t,
                            },
                        );
                    }
                }
            }
        }
    }
    // side information at node l: undesired sums of the rows that skip l
    let mut side: HashMap<(usize, u64), VecDeque<Virtual>> = HashMap::new();
    for l in 0..local_n {
        for &set in &sets {
            let queue = side.entry((l, set)).or_default();
            for u in (0..nu).filter(|&u| !block.lambda.get(u, l)) {
                queue.extend(undesired[&(u, set)].iter().copied());
            }
        }
    }
    for u in 0..nu {
        for set in std::iter::once(0u64).chain(sets.iter().copied()) {
            let t = set.count_ones() as usize;
            let count = pow(kappa, f - t - 1) * pow(gap, t);
            for _ in 0..count {
                let e = Virtual::Row(take(target));
                for &l in &supports[u] {
                    let mut terms = vec![Term { v: e, coef: 1 }];
                    if set != 0 {
                        let z = side
                            .get_mut(&(l, set))
                            .and_then(VecDeque::pop_front)
                            .expect("side information supply matches demand");
                        terms.push(Term { v: z, coef: 1 });
                    }
                    if kept[u] >> l & 1 == 1 {
                        let rep = pair.present_index(u, l).expect("row holds a one at l");
                        b.push(
                            block.coords[l],
                            terms,
                            Label {
                                block: block_label,
                                rep,
                                round: t + 1,
                            },
                        );
                    }
                }
            }
        }
    }
    debug_assert!(side.values().all(VecDeque::is_empty));
    debug_assert_eq!(next[target], needed);
    Ok(())
}

pub(crate) fn part_record(block: &Block, stripes: usize, repeats: usize) -> PartRecord {
    PartRecord {
        coords: block.coords.clone(),
        kappa: block.lambda.kappa(),
        nu: block.lambda.nu(),
        rate_rows: block.lambda.rows(),
        stripes,
        repeats,
    }
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
    let block = Block::whole(store.code(), lambda);
    let mut b = PlanBuilder::new(store);
    let stripes: Vec<usize> = (0..store.beta()).collect();
    b.parts.push(part_record(&block, store.beta(), 1));
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, 0));
    append_run(&mut b, &block, target, &stripes, 0, 0, trim, &mut rng)?;
    let protocol = if trim { Protocol::A } else { Protocol::P1 };
    Ok(b.finish(protocol, target, store.field().order()))
}

/// Symmetric file-dependent plan; needs `β = ν^f`.
pub fn plan_protocol1(
    store: &CodedStore,
    lambda: &RateMatrix,
    target: usize,
    seed: u64,
) -> Result<QueryPlan, ProtocolError> {
    plan(store, lambda, target, seed, false)
}

/// As [`plan_protocol1`], keeping each row's downloads only on the smallest
/// information set inside its support.
pub fn plan_protocol_a(
    store: &CodedStore,
    lambda: &RateMatrix,
    target: usize,
    seed: u64,
) -> Result<QueryPlan, ProtocolError> {
    plan(store, lambda, target, seed, true)
}
