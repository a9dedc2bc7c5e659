use codedpir::code::LinearCode;
use codedpir::dss::{encode_store, generate_files};
use codedpir::fixtures;
use codedpir::lambda::RateMatrix;
use codedpir::protocols::{
    audit_privacy, collect_responses, plan_protocol1, plan_protocol_a, recover, run, Protocol,
    ProtocolError, Scenario, Transcript,
};
use codedpir::rates::{mds_pir_capacity, ratio, schedule_counts, Files};
use proptest::prelude::*;

const NU_MAX: usize = 8;
const BUDGET: u64 = 20_000_000;

fn c1_lambda() -> RateMatrix {
    RateMatrix::new(&fixtures::c1(), &fixtures::c1_rate_rows()).unwrap()
}

fn c2_lambda() -> RateMatrix {
    RateMatrix::new(&fixtures::c2(), &fixtures::c2_rate_rows()).unwrap()
}

fn parity_lambda() -> RateMatrix {
    RateMatrix::new(
        &fixtures::parity3(),
        &[vec![1, 1, 0], vec![1, 0, 1], vec![0, 1, 1]],
    )
    .unwrap()
}

fn run_with(
    code: &LinearCode,
    protocol: Protocol,
    lambda: RateMatrix,
    files: usize,
    target: usize,
    seed: u64,
) -> Transcript {
    let scenario = Scenario::with_rate_matrix(protocol, lambda, files).unwrap();
    run(code, &scenario, files, target, seed).unwrap()
}

fn assert_sound(t: &Transcript) {
    assert!(t.recovered, "{:?} did not recover the file", t.protocol);
    assert!(
        t.privacy.pass,
        "{:?} failed the audit: {:?}",
        t.protocol,
        t.privacy.violating_nodes()
    );
    assert!(
        t.rate_matches(),
        "{:?}: rate {} expected {:?}",
        t.protocol,
        t.rate,
        t.expected_rate
    );
}

#[test]
fn c1_symmetric_file_dependent() {
    let t = run_with(&fixtures::c1(), Protocol::P1, c1_lambda(), 2, 0, 7);
    assert_sound(&t);
    assert_eq!(t.beta, 9);
    assert_eq!(t.download, 50);
    assert_eq!(t.rate, ratio(27, 50));
}

#[test]
fn c1_asymmetric_file_dependent() {
    let t = run_with(&fixtures::c1(), Protocol::A, c1_lambda(), 2, 1, 7);
    assert_sound(&t);
    assert_eq!(t.download, 45);
    assert_eq!(t.rate, ratio(3, 5));
}

#[test]
fn repetition_with_one_file() {
    let rep = fixtures::repetition2();
    let lambda = RateMatrix::new(&rep, &[vec![1, 0], vec![0, 1]]).unwrap();
    let t = run_with(&rep, Protocol::P1, lambda, 1, 0, 3);
    assert_sound(&t);
    assert_eq!(t.download, 2);
    assert_eq!(t.rate, ratio(1, 1));
}

#[test]
fn round_one_counts_per_entry() {
    // κ^{f−1} requested-file sums and κ^{f−1} sums of each other file
    let (code, lambda) = (fixtures::c1(), c1_lambda());
    let data = generate_files(2, 9, 3, code.field(), 1).unwrap();
    let store = encode_store(&data, &code).unwrap();
    let plan = plan_protocol1(&store, &lambda, 0, 5).unwrap();
    for l in 0..code.n() {
        for rep in 0..lambda.kappa() {
            let round_one: Vec<u64> = plan.downloads[l]
                .iter()
                .filter(|d| d.label.round == 1 && d.label.rep == rep)
                .map(|d| plan.signature(d).unwrap())
                .collect();
            assert_eq!(round_one.iter().filter(|&&s| s == 0b01).count(), 2);
            assert_eq!(round_one.iter().filter(|&&s| s == 0b10).count(), 2);
        }
    }
}

#[test]
fn asymmetric_saves_redundant_entries() {
    for (code, lambda) in [(fixtures::c1(), c1_lambda()), (fixtures::c2(), c2_lambda())] {
        for f in 1..=3usize {
            let p1 = run_with(&code, Protocol::P1, lambda.clone(), f, 0, 11);
            let a = run_with(&code, Protocol::A, lambda.clone(), f, 0, 11);
            assert_sound(&p1);
            assert_sound(&a);
            let (kappa, nu) = (lambda.kappa(), lambda.nu());
            let entry = schedule_counts(kappa, nu, f as u32).unwrap().per_entry;
            let redundant = kappa * code.n() - nu * code.k();
            let saved = num_bigint::BigUint::from(redundant) * entry;
            assert_eq!(
                num_bigint::BigUint::from(p1.download - a.download),
                saved,
                "f = {f}"
            );
        }
    }
}

#[test]
fn capacity_achieving_download_relation() {
    // nD/β = k/C on a capacity-achieving input, D per node
    let code = fixtures::parity3();
    for f in 1..=3usize {
        let t = run_with(&code, Protocol::P1, parity_lambda(), f, 0, 2);
        assert_sound(&t);
        assert!(t
            .download_per_node
            .iter()
            .all(|&d| d == t.download_per_node[0]));
        let lhs = ratio(code.n() * t.download_per_node[0], t.beta);
        let capacity = mds_pir_capacity(3, 2, Files::Finite(f as u32)).unwrap();
        assert_eq!(lhs, ratio(2, 1) / capacity.clone());
        assert_eq!(t.rate, capacity);
    }
    let t = run_with(&code, Protocol::P2, parity_lambda(), 2, 1, 2);
    assert_sound(&t);
    let capacity = mds_pir_capacity(3, 2, Files::Infinite).unwrap();
    assert_eq!(
        ratio(code.n() * t.download_per_node[0], t.beta),
        ratio(2, 1) / capacity
    );
    assert_eq!(t.rate, ratio(1, 3));
}

#[test]
fn file_independent_rates() {
    let t = run_with(&fixtures::c2(), Protocol::P2, c2_lambda(), 2, 0, 4);
    assert_sound(&t);
    assert_eq!(t.rate, ratio(5, 18));
    let t = run_with(&fixtures::c1(), Protocol::AInf, c1_lambda(), 2, 1, 4);
    assert_sound(&t);
    assert_eq!(t.rate, ratio(1, 3));
    let t = run_with(&fixtures::c2(), Protocol::AInf, c2_lambda(), 3, 2, 4);
    assert_sound(&t);
    assert_eq!(t.rate, ratio(1, 3));
}

#[test]
fn direct_sum_compositions() {
    let c1 = fixtures::c1();
    let s = Scenario::prepare(&c1, Protocol::BP2, 2, NU_MAX, BUDGET).unwrap();
    let t = run(&c1, &s, 2, 0, 9).unwrap();
    assert_sound(&t);
    assert_eq!(t.rate, ratio(3, 8));
    let s = Scenario::prepare(&c1, Protocol::BP1, 2, NU_MAX, BUDGET).unwrap();
    assert_eq!(s.beta, 36);
    let t = run(&c1, &s, 2, 1, 9).unwrap();
    assert_sound(&t);
    assert_eq!(t.rate, ratio(18, 29));
}

#[test]
fn single_part_composition_matches_subprotocol() {
    let code = fixtures::parity3();
    let b = run(
        &code,
        &Scenario::prepare(&code, Protocol::BP1, 2, NU_MAX, BUDGET).unwrap(),
        2,
        0,
        1,
    )
    .unwrap();
    let p = run_with(&code, Protocol::P1, parity_lambda(), 2, 0, 1);
    assert_sound(&b);
    assert_eq!((b.beta, b.download), (p.beta, p.download));
}

#[test]
fn indecomposable_code_is_rejected() {
    let c2 = fixtures::c2();
    assert!(matches!(
        Scenario::prepare(&c2, Protocol::BP2, 2, NU_MAX, BUDGET),
        Err(ProtocolError::Indecomposable)
    ));
}

#[test]
fn part_without_capacity_matrix_is_rejected() {
    // C3 alongside a repetition block: the [7,4] part has no κ/ν = 4/7 matrix
    let mut rows: Vec<Vec<u32>> = fixtures::c3()
        .generator()
        .to_rows()
        .into_iter()
        .map(|mut r| {
            r.extend([0, 0]);
            r
        })
        .collect();
    rows.push(vec![0, 0, 0, 0, 0, 0, 0, 1, 1]);
    let code = LinearCode::new(fixtures::c3().field().clone(), rows).unwrap();
    assert!(matches!(
        Scenario::prepare(&code, Protocol::BP1, 2, NU_MAX, BUDGET),
        Err(ProtocolError::PartNotCapacityAchieving { part: 1, .. })
    ));
}

#[test]
fn table2_schedule_end_to_end() {
    let c2 = fixtures::c2();
    let s = Scenario::with_schedule(fixtures::table2_schedule());
    for target in 0..3 {
        let t = run(&c2, &s, 3, target, 21).unwrap();
        assert!(t.recovered && t.privacy.pass);
        assert_eq!(t.download, 14);
        assert_eq!(t.rate, ratio(5, 14));
    }
    let broken = Scenario::with_schedule(fixtures::table2_schedule().without(8, 1));
    let t = run(&c2, &broken, 2, 0, 21).unwrap();
    assert!(!t.recovered);
}

#[test]
fn dropping_a_sum_breaks_the_audit() {
    let (code, lambda) = (fixtures::c1(), c1_lambda());
    let data = generate_files(2, 9, 3, code.field(), 3).unwrap();
    let store = encode_store(&data, &code).unwrap();
    let mut plans: Vec<_> = (0..2)
        .map(|m| plan_protocol_a(&store, &lambda, m, 8).unwrap())
        .collect();
    assert!(audit_privacy(&plans, code.field()).pass);
    let undesired = plans[0].downloads[3]
        .iter()
        .position(|d| plans[0].signature(d) == Some(0b10))
        .unwrap();
    plans[0].downloads[3].remove(undesired);
    let report = audit_privacy(&plans, code.field());
    assert!(!report.pass);
    assert_eq!(report.violating_nodes(), vec![4]);
}

#[test]
fn masked_offsets_must_be_absorbed() {
    let (code, lambda) = (fixtures::c2(), c2_lambda());
    let data = generate_files(2, 3, 5, code.field(), 3).unwrap();
    let store = encode_store(&data, &code).unwrap();
    let mut plans: Vec<_> = (0..2)
        .map(|m| codedpir::protocols::plan_protocol2(&store, &lambda, m, 8).unwrap())
        .collect();
    assert!(audit_privacy(&plans, code.field()).pass);
    // strip the mask from one requested-symbol download at node 2
    let d = plans[1].downloads[1]
        .iter_mut()
        .find(|d| d.terms.len() == 2)
        .unwrap();
    d.terms.pop();
    let report = audit_privacy(&plans, code.field());
    assert!(!report.pass);
    assert_eq!(report.violating_nodes(), vec![2]);
}

#[test]
fn transcript_replays_byte_identically() {
    let c1 = fixtures::c1();
    let s = Scenario::prepare(&c1, Protocol::P2, 2, NU_MAX, BUDGET).unwrap();
    let a = run(&c1, &s, 2, 0, 33).unwrap();
    let b = run(&c1, &s, 2, 0, 33).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(Transcript::from_json(&a.to_json()).unwrap(), a);
}

#[test]
fn recovery_rejects_mismatched_responses() {
    let (code, lambda) = (fixtures::c1(), c1_lambda());
    let data = generate_files(2, 9, 3, code.field(), 3).unwrap();
    let store = encode_store(&data, &code).unwrap();
    let plan = plan_protocol1(&store, &lambda, 0, 1).unwrap();
    let mut responses = collect_responses(&store, &plan).unwrap();
    responses[2].values.pop();
    assert!(matches!(
        recover(&code, &plan, &responses),
        Err(ProtocolError::ResponseMismatch(_))
    ));
}

#[test]
fn stripe_count_is_enforced() {
    let (code, lambda) = (fixtures::c1(), c1_lambda());
    let data = generate_files(2, 4, 3, code.field(), 3).unwrap();
    let store = encode_store(&data, &code).unwrap();
    assert!(matches!(
        plan_protocol1(&store, &lambda, 0, 1),
        Err(ProtocolError::StripeMismatch {
            expected: 9,
            got: 4
        })
    ));
    assert!(matches!(
        plan_protocol1(&store, &lambda, 2, 1),
        Err(ProtocolError::TargetOutOfRange {
            target: 3,
            files: 2
        })
    ));
}

fn protocol_strategy() -> impl Strategy<Value = Protocol> {
    prop_oneof![
        Just(Protocol::P1),
        Just(Protocol::A),
        Just(Protocol::P2),
        Just(Protocol::AInf),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn generated_plans_recover_privately_at_the_closed_form_rate(
        protocol in protocol_strategy(),
        which in 0usize..4,
        files in 1usize..=3,
        seed in any::<u64>(),
        target_pick in any::<usize>(),
    ) {
        let (code, lambda) = match which {
            0 => (fixtures::c1(), c1_lambda()),
            1 => (fixtures::c2(), c2_lambda()),
            2 => (fixtures::parity3(), parity_lambda()),
            _ => {
                let rep = fixtures::repetition2();
                let l = RateMatrix::new(&rep, &[vec![1, 0], vec![0, 1]]).unwrap();
                (rep, l)
            }
        };
        let t = run_with(&code, protocol, lambda, files, target_pick % files, seed);
        prop_assert!(t.recovered);
        prop_assert!(t.privacy.pass);
        prop_assert!(t.rate_matches());
    }
}
