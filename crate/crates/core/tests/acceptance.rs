//! Acceptance gate: one line per criterion, nonzero exit when any fails.

use std::time::{Duration, Instant};

use codedpir::code::LinearCode;
use codedpir::field::Field;
use codedpir::fixtures;
use codedpir::lambda::{
    find_min_ratio, find_rate_matrix, is_capacity_achieving, validate_rate_matrix, CapacityVerdict,
    InterferencePair, RateMatrix, SearchOutcome,
};
use codedpir::protocols::{run, verify_schedule, Protocol, Scenario, Transcript};
use codedpir::rates::{
    mds_pir_capacity, proposition1_check, ratio, render4, to_f64, Files, Rational,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NU_MAX: usize = 8;
const BUDGET: u64 = 20_000_000;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn paper_codes() -> Vec<(&'static str, LinearCode)> {
    vec![
        ("C1", fixtures::c1()),
        ("C2", fixtures::c2()),
        ("C3", fixtures::c3()),
        ("C4", fixtures::c4()),
    ]
}

/// Equal at 4 decimals, and the exact value is the expected fraction.
fn matches_table(r: &Rational, exact: Rational, printed: f64) -> bool {
    *r == exact && (to_f64(r) - printed).abs() < 5e-5
}

fn capacity_formula() -> Check {
    let c = mds_pir_capacity(5, 3, Files::Finite(2)).map_err(|e| e.to_string())?;
    ensure(c == ratio(5, 8), || format!("C(5,3,2) = {c}"))?;
    let expected = ["0.4", "0.4444", "0.4286", "0.4545"];
    for ((name, code), want) in paper_codes().into_iter().zip(expected) {
        let c = mds_pir_capacity(code.n(), code.k(), Files::Infinite).map_err(|e| e.to_string())?;
        let got = render4(&c);
        ensure(got == want, || {
            format!("{name}: asymptotic capacity {got}, want {want}")
        })?;
    }
    Ok("C(5,3,2) = 5/8; asymptotic capacities 0.4 0.4444 0.4286 0.4545".into())
}

fn table_one() -> Check {
    let ratios = [(2, 3), (2, 3), (3, 5), (3, 4)];
    let symmetric = [
        (ratio(3, 10), 0.3),
        (ratio(5, 18), 0.2778),
        (ratio(8, 21), 0.3810),
        (ratio(2, 11), 0.1818),
    ];
    let asymmetric = [
        (ratio(1, 3), 0.3333),
        (ratio(1, 3), 0.3333),
        (ratio(2, 5), 0.4),
        (ratio(1, 4), 0.25),
    ];
    let mut slowest = Duration::ZERO;
    for (i, (name, code)) in paper_codes().into_iter().enumerate() {
        let start = Instant::now();
        let min = find_min_ratio(&code, NU_MAX, BUDGET).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        slowest = slowest.max(took);
        ensure(took < Duration::from_secs(60), || {
            format!("{name}: search took {took:?}")
        })?;
        let (kappa, nu) = min.matrix.ratio();
        ensure((kappa, nu) == ratios[i], || {
            format!("{name}: min ratio {kappa}/{nu}")
        })?;
        ensure(min.certified, || format!("{name}: minimum not certified"))?;
        let s = codedpir::rates::rate_symmetric(kappa, nu, code.k(), code.n(), Files::Infinite)
            .map_err(|e| e.to_string())?;
        let a = codedpir::rates::rate_asymmetric(kappa, nu, Files::Infinite)
            .map_err(|e| e.to_string())?;
        ensure(
            matches_table(&s, symmetric[i].0.clone(), symmetric[i].1),
            || format!("{name}: R_S = {s}"),
        )?;
        ensure(
            matches_table(&a, asymmetric[i].0.clone(), asymmetric[i].1),
            || format!("{name}: R_A = {a}"),
        )?;
    }
    let c1 = fixtures::c1();
    let parts = c1
        .direct_sum_decompose()
        .map_err(|e| e.to_string())?
        .shapes();
    let b =
        codedpir::rates::rate_direct_sum(&parts, 3, Files::Infinite).map_err(|e| e.to_string())?;
    ensure(matches_table(&b, ratio(3, 8), 0.375), || {
        format!("C1: R_B = {b}")
    })?;
    Ok(format!(
        "min ratios 2/3 2/3 3/5 3/4, R_S/R_A/R_B match; slowest search {slowest:.2?}"
    ))
}

fn example_one() -> Check {
    let code = fixtures::c1();
    let lambda = RateMatrix::new(&code, &fixtures::c1_rate_rows()).map_err(|e| e.to_string())?;
    for (protocol, download, rate) in [
        (Protocol::P1, 50, ratio(27, 50)),
        (Protocol::A, 45, ratio(3, 5)),
    ] {
        let scenario =
            Scenario::with_rate_matrix(protocol, lambda.clone(), 2).map_err(|e| e.to_string())?;
        ensure(scenario.beta == 9, || {
            format!("{protocol:?}: beta {}", scenario.beta)
        })?;
        for seed in 0..20u64 {
            for target in 0..2 {
                let t = run(&code, &scenario, 2, target, seed).map_err(|e| e.to_string())?;
                ensure(t.download == download && t.rate == rate, || {
                    format!(
                        "{protocol:?} seed {seed}: download {} rate {}",
                        t.download, t.rate
                    )
                })?;
                ensure(t.recovered, || {
                    format!("{protocol:?} seed {seed} file {}: recovery", target + 1)
                })?;
                ensure(t.privacy.pass && t.privacy.nodes.len() == 5, || {
                    format!(
                        "{protocol:?} seed {seed}: audit fails at {:?}",
                        t.privacy.violating_nodes()
                    )
                })?;
            }
        }
    }
    Ok(
        "P1: D = 50, rate 27/50; A: D = 45, rate 3/5; 20 seeds x 2 files recovered and private"
            .into(),
    )
}

fn example_two() -> Check {
    let c1 = fixtures::c1();
    let d = c1.direct_sum_decompose().map_err(|e| e.to_string())?;
    let coords: Vec<String> = d.parts.iter().map(|p| p.coords.to_string()).collect();
    ensure(
        coords == ["{1,2,4}", "{3,5}"] && d.shapes() == [(3, 2), (2, 1)],
        || format!("parts {coords:?} shapes {:?}", d.shapes()),
    )?;
    for p in &d.parts {
        let v = is_capacity_achieving(&p.code, NU_MAX, BUDGET).map_err(|e| e.to_string())?;
        ensure(matches!(v, CapacityVerdict::Yes(_)), || {
            format!("part {} not certified", p.coords)
        })?;
    }
    let scenario =
        Scenario::prepare(&c1, Protocol::BP2, 2, NU_MAX, BUDGET).map_err(|e| e.to_string())?;
    let t = run(&c1, &scenario, 2, 0, 1).map_err(|e| e.to_string())?;
    ensure(
        t.rate == ratio(3, 8) && t.recovered && t.privacy.pass,
        || {
            format!(
                "B/P2 rate {} recovered {} private {}",
                t.rate, t.recovered, t.privacy.pass
            )
        },
    )?;
    Ok(
        "C1 = [3,2] on {1,2,4} + [2,1] on {3,5}, both capacity-achieving; B/P2 measured rate 3/8"
            .into(),
    )
}

fn example_three() -> Check {
    let c2 = fixtures::c2();
    let d2 = c2
        .generalized_hamming_weight(2)
        .map_err(|e| e.to_string())?;
    ensure(d2 == 3, || format!("d_2(C2) = {d2}"))?;
    let schedule = fixtures::table2_schedule();
    let v = verify_schedule(&c2, &schedule, 2).map_err(|e| e.to_string())?;
    ensure(
        v.recoverable && v.private && v.download == 14 && v.rate == ratio(5, 14),
        || format!("{v:?}"),
    )?;
    let broken = verify_schedule(&c2, &schedule.without(8, 1), 2).map_err(|e| e.to_string())?;
    ensure(!broken.recoverable, || {
        "schedule without node 9's second sum still recoverable".into()
    })?;
    Ok("d_2(C2) = 3; schedule (recoverable, private, 14, 5/14); without node 9's second sum: unrecoverable".into())
}

/// All codewords by direct encoding of every binary message.
fn codewords_naive(code: &LinearCode) -> Vec<u64> {
    let rows: Vec<u64> = code
        .generator()
        .to_rows()
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold(0u64, |m, (l, &x)| if x != 0 { m | 1 << l } else { m })
        })
        .collect();
    (0u64..1 << rows.len())
        .map(|msg| {
            rows.iter()
                .enumerate()
                .filter(|(i, _)| msg >> i & 1 == 1)
                .fold(0, |c, (_, r)| c ^ r)
        })
        .collect()
}

/// Smallest support of a subcode of dimension 1 or 2 over GF(2).
fn naive_weight(words: &[u64], s: usize) -> u32 {
    let nonzero: Vec<u64> = words.iter().copied().filter(|&w| w != 0).collect();
    match s {
        1 => nonzero.iter().map(|w| w.count_ones()).min().unwrap(),
        2 => {
            let mut best = u32::MAX;
            for (i, &a) in nonzero.iter().enumerate() {
                for &b in &nonzero[i + 1..] {
                    best = best.min((a | b).count_ones());
                }
            }
            best
        }
        _ => unreachable!(),
    }
}

fn hamming_weights() -> Check {
    let mut slowest = Duration::ZERO;
    for (code, want) in [(fixtures::c3(), 5), (fixtures::c4(), 4)] {
        let start = Instant::now();
        let d3 = code
            .generalized_hamming_weight(3)
            .map_err(|e| e.to_string())?;
        let took = start.elapsed();
        slowest = slowest.max(took);
        ensure(d3 == want && took < Duration::from_secs(30), || {
            format!("d_3 = {d3} in {took:?}, want {want}")
        })?;
    }
    for (name, code) in paper_codes() {
        let words = codewords_naive(&code);
        for s in 1..=2 {
            let fast = code
                .generalized_hamming_weight(s)
                .map_err(|e| e.to_string())?;
            let slow = naive_weight(&words, s) as usize;
            ensure(fast == slow, || {
                format!("{name}: d_{s} = {fast}, pairwise oracle {slow}")
            })?;
        }
    }
    Ok(format!(
        "d_3(C3) = 5, d_3(C4) = 4 (slowest {slowest:.2?}); pairwise oracle agrees for s <= 2"
    ))
}

fn binary_rank(mut cols: Vec<u64>) -> usize {
    let mut rank = 0;
    for bit in 0..64 {
        if let Some(p) = cols.iter().position(|c| c >> bit & 1 == 1) {
            let pivot = cols.swap_remove(p);
            for c in cols.iter_mut() {
                if *c >> bit & 1 == 1 {
                    *c ^= pivot;
                }
            }
            rank += 1;
        }
    }
    rank
}

/// Claim check computed from the matrix alone: every row's ones span the
/// code, and the absent entries of a column never point at a row that
/// holds a one there.
fn claim_oracle(code: &LinearCode, rows: &[Vec<u8>], pair: &InterferencePair) -> bool {
    let column = |l: usize| {
        code.column(l)
            .iter()
            .enumerate()
            .fold(0u64, |m, (i, &x)| if x != 0 { m | 1 << i } else { m })
    };
    let spans = rows.iter().all(|r| {
        let cols: Vec<u64> = (0..r.len()).filter(|&l| r[l] == 1).map(column).collect();
        binary_rank(cols) == code.k()
    });
    let disjoint = pair
        .absent
        .iter()
        .all(|row| row.iter().enumerate().all(|(l, &u)| rows[u][l] == 0));
    let present_ok = pair
        .present
        .iter()
        .all(|row| row.iter().enumerate().all(|(l, &u)| rows[u][l] == 1));
    spans && disjoint && present_ok
}

fn random_code(rng: &mut ChaCha8Rng) -> LinearCode {
    loop {
        let n = rng.gen_range(2..=8);
        let k = rng.gen_range(1..=4.min(n - 1));
        let rows: Vec<Vec<u32>> = (0..k)
            .map(|_| (0..n).map(|_| rng.gen_range(0..2)).collect())
            .collect();
        if let Ok(code) = LinearCode::new(Field::binary(), rows) {
            if (0..n).all(|l| code.column(l).iter().any(|&x| x != 0)) {
                return code;
            }
        }
    }
}

/// Random constant-column-weight matrix, kept only if valid.
fn random_rate_matrix(code: &LinearCode, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<u8>>> {
    let nu = rng.gen_range(2..=4);
    let kappa = rng.gen_range(1..nu);
    let mut rows = vec![vec![0u8; code.n()]; nu];
    let mut idx: Vec<usize> = (0..nu).collect();
    #[allow(clippy::needless_range_loop)]
    for l in 0..code.n() {
        idx.shuffle(rng);
        for &u in &idx[..kappa] {
            rows[u][l] = 1;
        }
    }
    validate_rate_matrix(code, &rows)
        .ok()?
        .valid
        .then_some(rows)
}

fn property_suite() -> Check {
    let mut codes = paper_codes();
    codes.push(("[3,2]", fixtures::parity3()));
    codes.push(("[2,1]", fixtures::repetition2()));
    for (name, code) in &codes {
        let m = find_min_ratio(code, NU_MAX, BUDGET)
            .map_err(|e| e.to_string())?
            .matrix;
        let achieving = m.kappa() * code.n() == m.nu() * code.k();
        for f in 1..=10 {
            let c = proposition1_check(code, &m, Files::Finite(f)).map_err(|e| e.to_string())?;
            ensure(c.holds, || {
                format!(
                    "{name} f={f}: {} <= {} <= {} fails",
                    c.symmetric, c.asymmetric, c.capacity
                )
            })?;
            ensure(c.equal == achieving, || {
                format!(
                    "{name} f={f}: equality {} but ratio test {achieving}",
                    c.equal
                )
            })?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 50 {
        attempts += 1;
        ensure(attempts < 100_000, || {
            format!("only {checked} valid random matrices found")
        })?;
        let code = random_code(&mut rng);
        let Some(rows) = random_rate_matrix(&code, &mut rng) else {
            continue;
        };
        let m = RateMatrix::new(&code, &rows).map_err(|e| e.to_string())?;
        let pair = InterferencePair::build(&m);
        ensure(
            pair.check_claims(&code, m.nu()) && claim_oracle(&code, &rows, &pair),
            || format!("claim fails for {rows:?}"),
        )?;
        // ratio bound on whatever the search returns for the same shape
        if let SearchOutcome::Found(found) =
            find_rate_matrix(&code, m.kappa(), m.nu(), BUDGET).map_err(|e| e.to_string())?
        {
            ensure(found.kappa() * code.n() >= found.nu() * code.k(), || {
                "search result below k/n".into()
            })?;
        } else {
            return Err(format!("search misses an existing matrix {rows:?}"));
        }
        let min = find_min_ratio(&code, 6, BUDGET)
            .map_err(|e| e.to_string())?
            .matrix;
        ensure(min.kappa() * code.n() >= min.nu() * code.k(), || {
            "minimum below k/n".into()
        })?;
        checked += 1;
    }
    Ok(format!("ordering and equality case for 6 codes x f = 1..10; claim holds for 50 random matrices ({attempts} draws)"))
}

fn consistency() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let c1_lambda =
        RateMatrix::new(&fixtures::c1(), &fixtures::c1_rate_rows()).map_err(|e| e.to_string())?;
    let c2_lambda =
        RateMatrix::new(&fixtures::c2(), &fixtures::c2_rate_rows()).map_err(|e| e.to_string())?;
    let parity = fixtures::parity3();
    let parity_lambda = find_min_ratio(&parity, NU_MAX, BUDGET)
        .map_err(|e| e.to_string())?
        .matrix;
    let mut runs = 0;
    let mut per_protocol = std::collections::BTreeMap::new();
    while runs < 100 {
        let files = rng.gen_range(1..=3usize);
        let seed = rng.gen::<u64>();
        let target = rng.gen_range(0..files);
        let (code, scenario) = match rng.gen_range(0..8) {
            w @ 0..=3 => {
                let protocol = [Protocol::P1, Protocol::A, Protocol::P2, Protocol::AInf][w];
                let (code, lambda) = match rng.gen_range(0..3) {
                    0 => (fixtures::c1(), c1_lambda.clone()),
                    1 => (fixtures::c2(), c2_lambda.clone()),
                    _ => (parity.clone(), parity_lambda.clone()),
                };
                let s = Scenario::with_rate_matrix(protocol, lambda, files)
                    .map_err(|e| e.to_string())?;
                (code, s)
            }
            4 | 5 => {
                let protocol = if rng.gen() {
                    Protocol::BP1
                } else {
                    Protocol::BP2
                };
                let c1 = fixtures::c1();
                let s = Scenario::prepare(&c1, protocol, files, NU_MAX, BUDGET)
                    .map_err(|e| e.to_string())?;
                (c1, s)
            }
            _ => (
                fixtures::c2(),
                Scenario::with_schedule(fixtures::table2_schedule()),
            ),
        };
        let t: Transcript =
            run(&code, &scenario, files, target, seed).map_err(|e| e.to_string())?;
        let expected = match &t.expected_rate {
            Some(r) => r.clone(),
            None => ratio(5, 14),
        };
        ensure(t.rate == expected && t.recovered && t.privacy.pass, || {
            format!(
                "{:?} f={files} seed={seed}: rate {} vs {expected}, recovered {}, private {}",
                t.protocol, t.rate, t.recovered, t.privacy.pass
            )
        })?;
        *per_protocol.entry(format!("{:?}", t.protocol)).or_insert(0) += 1;
        runs += 1;
    }
    let mix: Vec<String> = per_protocol
        .iter()
        .map(|(p, c)| format!("{p}:{c}"))
        .collect();
    Ok(format!("100 runs exact ({})", mix.join(" ")))
}

fn download_relation() -> Check {
    let codes = [fixtures::parity3(), fixtures::repetition2()];
    for code in &codes {
        let lambda = find_min_ratio(code, NU_MAX, BUDGET)
            .map_err(|e| e.to_string())?
            .matrix;
        let k_over = |c: Rational| ratio(code.k(), 1) / c;
        let mut cases: Vec<(Protocol, usize, Files)> = (1..=3)
            .map(|f| (Protocol::P1, f, Files::Finite(f as u32)))
            .collect();
        cases.push((Protocol::P2, 2, Files::Infinite));
        for (protocol, f, files) in cases {
            let s = Scenario::with_rate_matrix(protocol, lambda.clone(), f)
                .map_err(|e| e.to_string())?;
            let t = run(code, &s, f, 0, 3).map_err(|e| e.to_string())?;
            let d = t.download_per_node[0];
            ensure(t.download_per_node.iter().all(|&x| x == d), || {
                format!("{protocol:?}: uneven per-node download")
            })?;
            let lhs = ratio(code.n() * d, t.beta);
            let rhs =
                k_over(mds_pir_capacity(code.n(), code.k(), files).map_err(|e| e.to_string())?);
            ensure(lhs == rhs, || {
                format!(
                    "[{},{}] {protocol:?} f={f}: nD/beta = {lhs}, k/C = {rhs}",
                    code.n(),
                    code.k()
                )
            })?;
        }
    }
    Ok("nD/beta = k/C for P1 (f = 1, 2, 3) and P2 on [3,2] and [2,1]".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("capacity formula", capacity_formula),
        ("rate table", table_one),
        ("[5,3] end to end", example_one),
        ("direct-sum composition", example_two),
        ("[9,5] schedule", example_three),
        ("weight hierarchy oracle", hamming_weights),
        ("property suite", property_suite),
        ("closed-form consistency", consistency),
        ("download relation", download_relation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match check() {
            Ok(detail) => println!(
                "criterion {} ({name}): PASS [{:.2?}] {detail}",
                i + 1,
                start.elapsed()
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "criterion {} ({name}): FAIL [{:.2?}] {why}",
                    i + 1,
                    start.elapsed()
                );
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
