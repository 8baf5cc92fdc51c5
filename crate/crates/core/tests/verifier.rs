use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tesseract_core::experiments::{build_plan, run};
use tesseract_core::gadgets::W4Flavor;
use tesseract_core::noise::NoiseParams;
use tesseract_core::simulate::simulate;
use tesseract_core::verifier::*;
use tesseract_core::Basis;

#[test]
fn simulation_agrees_with_propagation_on_single_faults() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for basis in [Basis::X, Basis::Z] {
        let plan = build_plan("path4-enc", Some(basis)).unwrap();
        let circuit = plan.circuit();
        let cat = FaultCatalog::new(&plan).unwrap();
        let reps: Vec<_> = cat.representatives().cloned().collect();
        for k in 0..5000 {
            let f = &reps[rng.random_range(0..reps.len())];
            let by_propagation = cat.classify(std::slice::from_ref(f));
            let rec = simulate(&circuit, std::slice::from_ref(f), k);
            let by_simulation: FaultClass = plan.classify(&pack(&rec)).into();
            assert_eq!(by_propagation, by_simulation, "{f:?}");
        }
    }
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(300))]
    /// Pair classification by propagation matches full simulation and does
    /// not depend on the order the faults are listed in.
    #[test]
    fn fault_pairs_agree_with_simulation(i in 0usize..1 << 20, j in 0usize..1 << 20, seed in 0u64..1000) {
        let plan = build_plan("path4-enc", Some(Basis::Z)).unwrap();
        let cat = FaultCatalog::new(&plan).unwrap();
        let reps: Vec<_> = cat.representatives().cloned().collect();
        let (a, b) = (reps[i % reps.len()].clone(), reps[j % reps.len()].clone());
        let forward = cat.classify(&[a.clone(), b.clone()]);
        proptest::prop_assert_eq!(forward, cat.classify(&[b.clone(), a.clone()]));
        let rec = simulate(&plan.circuit(), &[a, b], seed);
        proptest::prop_assert_eq!(forward, FaultClass::from(plan.classify(&pack(&rec))));
    }
}

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64).max(1)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 64] |= (b as u64) << (i % 64);
    }
    out
}

#[test]
fn unflagged_gadget_fails_single_fault_check() {
    // hook errors from bare weight-4 checks must be caught by the verifier
    let mut plans = Vec::new();
    for input in [HarnessInput::Alternating, HarnessInput::Bell] {
        for basis in [Basis::X, Basis::Z] {
            plans.push(harness("bare-mb-cnot", 1, false, input, basis, |p| p.mb_cnot(0, 5, 6, W4Flavor::Bare)).unwrap());
        }
    }
    let t = verify_plans("bare-mb-cnot", &plans, 1).unwrap();
    assert!(!passes(&t), "{:?}", t.counts);
    assert!(!t.examples.is_empty());
}

#[test]
fn order_two_budget_is_enforced() {
    let plan = build_plan("cube8-enc", Some(Basis::Z)).unwrap();
    let cat = FaultCatalog::new(&plan).unwrap();
    assert!(cat.distinct_effects() > 0);
    let sampled = cat.sampled_order2(20_000, 3);
    assert!(sampled.sampled);
    assert_eq!(sampled.counts.total(), 20_000);
    assert_eq!(sampled.counts.accepted_logical_error, 0);
}

#[test]
fn unknown_targets_and_orders_are_errors() {
    assert!(matches!(gadget_plans("nope"), Err(VerifyError::UnknownTarget(_))));
    let plans = gadget_plans("transversal-cnot").unwrap();
    assert!(matches!(verify_plans("t", &plans, 3), Err(VerifyError::Order(3))));
}

#[test]
fn stronger_noise_means_more_errors() {
    let plan = build_plan("path4-enc", Some(Basis::X)).unwrap();
    let base = NoiseParams::h2();
    let low = run(&plan, 10_000, 21, &base).unwrap();
    let high = run(&plan, 10_000, 21, &base.scaled(10.0)).unwrap();
    assert!(high.error_rate() > low.error_rate(), "{} vs {}", high.error_rate(), low.error_rate());
    assert!(high.acceptance_rate() < low.acceptance_rate());
}
