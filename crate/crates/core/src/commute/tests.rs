use super::*;
use crate::expr::{parse, DEFAULT_TOL};
use crate::system::generate;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn grid() -> TimeGrid {
    TimeGrid::default_span(0.0)
}

fn example_a() -> LTVSystem {
    LTVSystem::new(
        parse("1").unwrap(),
        parse("3 + sin(t)").unwrap(),
        parse("3.25 + 0.25*sin(t)^2 + 1.5*sin(t) + 0.5*cos(t)").unwrap(),
        0.0,
        None,
        &grid(),
    )
    .unwrap()
}

fn example_k() -> PairConstants {
    PairConstants::new(1.0, -2.0, 0.0).unwrap()
}

fn example_m() -> PairConstants {
    PairConstants::new(1.0, 3.0, 3.0).unwrap()
}

fn with_state(mut sys: LTVSystem, y0: f64, dy0: f64) -> LTVSystem {
    sys.ic = Some(InitialState { y0, dy0 });
    sys
}

fn assert_pointwise(lhs: &CoeffExpr, rhs: &CoeffExpr, tol: f64) {
    for t in grid().iter() {
        let a = lhs.eval(t).unwrap();
        let b = rhs.eval(t).unwrap();
        assert!((a - b).abs() <= tol, "at t={t}: {a} vs {b}");
    }
}

#[test]
fn synthesize_matches_the_worked_pair() {
    let b = synthesize_pair(&example_a(), &example_k(), &grid(), DEFAULT_TOL).unwrap();
    assert_pointwise(&b.a2, &parse("1").unwrap(), 1e-12);
    assert_pointwise(&b.a1, &parse("1 + sin(t)").unwrap(), 1e-12);
    assert_pointwise(
        &b.a0,
        &parse("0.25 + 0.25*sin(t)^2 + 0.5*sin(t) + 0.5*cos(t)").unwrap(),
        1e-12,
    );
}

#[test]
fn identity_constants_are_rejected() {
    assert!(matches!(
        PairConstants::new(1.0, 0.0, 0.0),
        Err(Error::InvalidConstants(_))
    ));
    assert!(PairConstants::new(-1.0, 1.0, 0.0).is_err());
    assert!(PairConstants::new(f64::NAN, 1.0, 0.0).is_err());
}

#[test]
fn synthesize_rejects_ineligible_system() {
    let g = grid();
    let sys = LTVSystem::new(
        parse("1").unwrap(),
        parse("0").unwrap(),
        parse("sin(t)").unwrap(),
        0.0,
        None,
        &g,
    )
    .unwrap();
    assert!(matches!(
        synthesize_pair(&sys, &example_k(), &g, DEFAULT_TOL),
        Err(Error::NotEligible { .. })
    ));
}

#[test]
fn synthesize_then_check_recovers_constants() {
    let g = grid();
    let a = generate(parse("1").unwrap(), parse("cos(t)").unwrap(), 2.0, 0.0, &g).unwrap();
    let k = PairConstants::new(4.0, 1.0, -1.0).unwrap();
    let b = synthesize_pair(&a, &k, &g, DEFAULT_TOL).unwrap();
    let report = check_pair(&a, &b, &g, DEFAULT_TOL).unwrap();
    assert_eq!(report.verdict, Verdict::CommutativeZeroIC);
    let got = report.constants.unwrap();
    assert!((got.c2 - 4.0).abs() <= 1e-10);
    assert!((got.c1 - 1.0).abs() <= 1e-10);
    assert!((got.c0 + 1.0).abs() <= 1e-10);
}

#[test]
fn check_pair_grades_the_worked_pair() {
    let g = grid();
    let a = example_a();
    let b = synthesize_pair(&a, &example_k(), &g, DEFAULT_TOL).unwrap();

    // relaxed case
    let report = check_pair(&a, &b, &g, DEFAULT_TOL).unwrap();
    assert_eq!(report.verdict, Verdict::CommutativeZeroIC);
    let k = report.constants.unwrap();
    assert!((k.c2 - 1.0).abs() <= 1e-12);
    assert!((k.c1 + 2.0).abs() <= 1e-12);
    assert!(k.c0.abs() <= 1e-12);
    assert!((report.invariant_a0 - 1.0).abs() <= 1e-12);
    assert!(report.invariant_b0.abs() <= 1e-12);

    // with the matching nonzero state
    let a = with_state(a, 1.0, -1.5);
    let b = with_state(b, 1.0, -1.5);
    let report = check_pair(&a, &b, &g, DEFAULT_TOL).unwrap();
    assert_eq!(report.verdict, Verdict::CommutativeNonzeroIC);
    assert!(report.residuals.state_feasibility_gap.unwrap() <= 1e-12);
    assert!(report.residuals.derivative_ratio_gap.unwrap() <= 1e-12);
}

#[test]
fn check_pair_localizes_first_failing_row() {
    let g = grid();
    let a = example_a();
    let b = synthesize_pair(&a, &example_k(), &g, DEFAULT_TOL).unwrap();

    // b1 perturbed by t * a2^0.5 makes the recovered k1 equal to -2 + t
    let mut bad = b.clone();
    bad.a1 = bad.a1.clone() + CoeffExpr::time() * CoeffExpr::pow(a.a2.clone(), 0.5);
    let report = check_pair(&a, &bad, &g, DEFAULT_TOL).unwrap();
    assert_eq!(report.verdict, Verdict::NotCommutative);
    assert_eq!(report.failed_condition.as_deref(), Some("k1 not constant"));
    assert!(report.constants.is_none());

    // b0 perturbed by 0.01 t breaks the third row
    let mut bad = b.clone();
    bad.a0 = bad.a0.clone() + parse("0.01*t").unwrap();
    let report = check_pair(&a, &bad, &g, DEFAULT_TOL).unwrap();
    assert_eq!(report.failed_condition.as_deref(), Some("k0 not constant"));

    // b2 perturbed breaks the first row
    let mut bad = b;
    bad.a2 = bad.a2.clone() + parse("0.01*t").unwrap();
    let report = check_pair(&a, &bad, &g, DEFAULT_TOL).unwrap();
    assert_eq!(report.failed_condition.as_deref(), Some("k2 not constant"));
}

#[test]
fn identical_systems_are_a_feedthrough_pair() {
    let g = grid();
    let a = example_a();
    let report = check_pair(&a, &a.clone(), &g, DEFAULT_TOL).unwrap();
    assert_eq!(report.verdict, Verdict::NotCommutative);
    assert_eq!(
        report.failed_condition.as_deref(),
        Some("feedthrough-derivable pair, excluded")
    );
}

#[test]
fn mismatched_states_fail() {
    let g = grid();
    let a = example_a();
    let b = synthesize_pair(&a, &example_k(), &g, DEFAULT_TOL).unwrap();
    let a = with_state(a, 0.4, -0.3);
    let b = with_state(b, 0.2, -0.4);
    let report = check_pair(&a, &b, &g, DEFAULT_TOL).unwrap();
    assert_eq!(report.verdict, Verdict::NotCommutative);
    assert_eq!(
        report.failed_condition.as_deref(),
        Some("initial states differ")
    );
    // constants themselves were recoverable
    assert!(report.constants.is_some());
}

#[test]
fn zero_output_with_nonzero_derivative_fails_the_ratio() {
    let g = grid();
    let a = example_a();
    let b = synthesize_pair(&a, &example_k(), &g, DEFAULT_TOL).unwrap();
    let a = with_state(a, 0.0, 0.5);
    let b = with_state(b, 0.0, 0.5);
    let report = check_pair(&a, &b, &g, DEFAULT_TOL).unwrap();
    assert_eq!(
        report.failed_condition.as_deref(),
        Some("derivative ratio violated")
    );
}

#[test]
fn required_state_matches_the_worked_ratio() {
    let g = grid();
    let a = example_a();
    let state = required_initial_state(&a, &example_k(), 1.0, &g, DEFAULT_TOL).unwrap();
    assert_eq!(state.y0, 1.0);
    assert!((state.dy0 + 1.5).abs() <= 1e-12);

    // zero output forces zero derivative
    let state = required_initial_state(&a, &example_k(), 0.0, &g, DEFAULT_TOL).unwrap();
    assert_eq!(state, InitialState { y0: 0.0, dy0: 0.0 });

    // the same ratio through the second link
    let b = synthesize_pair(&a, &example_k(), &g, DEFAULT_TOL).unwrap();
    let state = required_initial_state(&b, &example_m(), 1.0, &g, DEFAULT_TOL).unwrap();
    assert!((state.dy0 + 1.5).abs() <= 1e-12);
}

#[test]
fn infeasible_constants_admit_no_state() {
    let g = grid();
    let a = example_a();
    // A0 = 1, so (c2 + c0 - 1)^2 must vanish; c0 = 5 leaves a gap of 25
    let k = PairConstants::new(1.0, -2.0, 5.0).unwrap();
    match required_initial_state(&a, &k, 1.0, &g, DEFAULT_TOL) {
        Err(Error::NoCommutingState { gap }) => assert!((gap - 25.0).abs() <= 1e-12),
        other => panic!("expected no commuting state, got {other:?}"),
    }

    // invariant above one admits no real solution at all
    let hot = generate(parse("1").unwrap(), parse("0").unwrap(), 2.0, 0.0, &g).unwrap();
    for c0 in [-2.0, 0.0, 1.0, 3.0] {
        let k = PairConstants::new(1.0, 1.0, c0).unwrap();
        assert!(required_initial_state(&hot, &k, 1.0, &g, DEFAULT_TOL).is_err());
    }
}

#[test]
fn inverse_constants_match_the_worked_values() {
    let l = invert_constants(&example_k());
    assert!((l.c2 - 1.0).abs() <= 1e-15);
    assert!((l.c1 - 2.0).abs() <= 1e-15);
    assert!((l.c0 - 2.0).abs() <= 1e-15);

    // c1 component is odd in the input c1
    let k_flip = PairConstants::new(1.0, 2.0, 0.0).unwrap();
    let l_flip = invert_constants(&k_flip);
    assert_eq!(l_flip.c1, -l.c1);
}

#[test]
fn inversion_is_an_involution() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..500 {
        let k = PairConstants::new(
            rng.gen_range(0.2..5.0),
            rng.gen_range(0.2..3.0) * if rng.gen() { 1.0 } else { -1.0 },
            rng.gen_range(-3.0..3.0),
        )
        .unwrap();
        let back = invert_constants(&invert_constants(&k));
        assert!((back.c2 - k.c2).abs() <= 1e-12 * (1.0 + k.c2.abs()));
        assert!((back.c1 - k.c1).abs() <= 1e-12 * (1.0 + k.c1.abs()));
        assert!((back.c0 - k.c0).abs() <= 1e-12 * (1.0 + k.c0.abs()));
    }
}

#[test]
fn invariant_transform_matches_worked_values() {
    assert!(transform_invariant(1.0, &example_k()).abs() <= 1e-15);
    assert!((transform_invariant(0.0, &example_m()) - 0.75).abs() <= 1e-15);
}

#[test]
fn invariant_transform_duality() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..500 {
        let k = PairConstants::new(
            rng.gen_range(0.2..5.0),
            rng.gen_range(0.2..3.0) * if rng.gen() { 1.0 } else { -1.0 },
            rng.gen_range(-3.0..3.0),
        )
        .unwrap();
        let a0 = rng.gen_range(-3.0..3.0);
        let b0 = transform_invariant(a0, &k);
        let back = transform_invariant(b0, &invert_constants(&k));
        assert!((back - a0).abs() <= 1e-12 * (1.0 + a0.abs()));
    }
}

#[test]
fn structure_transform_matches_the_worked_pair() {
    let f_a = parse("1.5 + 0.5*sin(t)").unwrap();
    let f_b = transform_structure(&f_a, &example_k());
    assert_pointwise(&f_b, &parse("0.5 + 0.5*sin(t)").unwrap(), 1e-12);

    // inverse composed with forward is the identity
    let back = transform_structure_inverse(&f_b, &example_k());
    assert_pointwise(&back, &f_a, 1e-12);
}

#[test]
fn structure_transform_agrees_with_synthesis() {
    let g = grid();
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..20 {
        let f = CoeffExpr::literal(rng.gen_range(-1.0..1.0))
            + CoeffExpr::literal(rng.gen_range(-1.0..1.0)) * parse("sin(t)").unwrap();
        let a = generate(parse("1").unwrap(), f.clone(), rng.gen_range(-1.0..1.0), 0.0, &g)
            .unwrap();
        let k = PairConstants::new(
            rng.gen_range(0.2..4.0),
            rng.gen_range(0.2..2.0) * if rng.gen() { 1.0 } else { -1.0 },
            rng.gen_range(-2.0..2.0),
        )
        .unwrap();
        let b = synthesize_pair(&a, &k, &g, DEFAULT_TOL).unwrap();
        // two independent routes to f_B
        assert_pointwise(&b.structure_function(), &transform_structure(&f, &k), 1e-10);
    }
}

#[test]
fn composition_matches_worked_values() {
    let p = compose_constants(&example_k(), &example_m(), DEFAULT_TOL).unwrap();
    assert!((p.c2 - 1.0).abs() <= 1e-15);
    assert!((p.c1 - 1.0).abs() <= 1e-15);
    assert!(p.c0.abs() <= 1e-15);

    let m = PairConstants::new(1.0, -1.0, 3.0).unwrap();
    let p = compose_constants(&example_k(), &m, DEFAULT_TOL).unwrap();
    assert!((p.c2 - 1.0).abs() <= 1e-15);
    assert!((p.c1 + 3.0).abs() <= 1e-15);
    assert!((p.c0 - 4.0).abs() <= 1e-15);
}

#[test]
fn composition_degeneracy_boundary() {
    // m1 exactly at tolerance is still a valid constant triple
    let tiny = PairConstants::new(1.0, DEFAULT_TOL, 0.0).unwrap();
    let p = compose_constants(&example_k(), &tiny, DEFAULT_TOL).unwrap();
    assert!((p.c1 + 2.0).abs() <= 1e-8);

    // a composition that cancels c1 is rejected as gain-derivable
    let m = PairConstants::new(1.0, 2.0, 0.0).unwrap();
    assert!(matches!(
        compose_constants(&example_k(), &m, DEFAULT_TOL),
        Err(Error::DegenerateComposition { .. })
    ));
}

#[test]
fn offset_identity_holds_for_worked_constants_and_inverse() {
    assert!(offset_consistency_residual(&example_k(), &example_m()) <= 1e-15);
    // the inverse-direction constants always satisfy the same identity
    assert!(offset_consistency_residual(&example_k(), &invert_constants(&example_k())) <= 1e-15);

    let mut rng = StdRng::seed_from_u64(17);
    for _ in 0..200 {
        let k = PairConstants::new(
            rng.gen_range(0.2..5.0),
            rng.gen_range(0.2..3.0) * if rng.gen() { 1.0 } else { -1.0 },
            rng.gen_range(-3.0..3.0),
        )
        .unwrap();
        let l = invert_constants(&k);
        assert!(
            offset_consistency_residual(&k, &l) <= 1e-10 * (1.0 + ratio_offset(&k).abs()),
            "k = {k:?}"
        );
    }
}

#[test]
fn offsets_solved_from_the_identity_compose_consistently() {
    // choose m1 so that the offset identity holds, then the composed chain
    // must carry the first link's offset
    let mut rng = StdRng::seed_from_u64(19);
    for _ in 0..200 {
        let k = PairConstants::new(
            rng.gen_range(0.2..4.0),
            rng.gen_range(0.3..2.0) * if rng.gen() { 1.0 } else { -1.0 },
            rng.gen_range(-2.0..2.0),
        )
        .unwrap();
        let mapped = k.c2.sqrt() * (ratio_offset(&k) - k.c1 / (2.0 * k.c2));
        if mapped.abs() < 0.05 {
            continue;
        }
        let m2 = rng.gen_range(0.2..4.0);
        let m0 = rng.gen_range(-2.0..2.0);
        let m1 = (m2 + m0 - 1.0) / mapped;
        if m1.abs() < 1e-3 {
            continue;
        }
        let m = PairConstants::new(m2, m1, m0).unwrap();
        assert!(offset_consistency_residual(&k, &m) <= 1e-10);
        if let Ok(p) = compose_constants(&k, &m, DEFAULT_TOL) {
            assert!(composed_offset_residual(&k, &p) <= 1e-10 * (1.0 + ratio_offset(&k).abs()));
        }
    }
}

#[test]
fn feasibility_gap_maps_exactly_across_the_pair() {
    // the inverse-direction feasibility residual is the forward one scaled
    // by 1/c2^2, so the two conditions hold or fail together
    let mut rng = StdRng::seed_from_u64(23);
    for _ in 0..500 {
        let k = PairConstants::new(
            rng.gen_range(0.2..5.0),
            rng.gen_range(0.2..3.0) * if rng.gen() { 1.0 } else { -1.0 },
            rng.gen_range(-3.0..3.0),
        )
        .unwrap();
        let a0 = rng.gen_range(-3.0..3.0);
        let b0 = transform_invariant(a0, &k);
        let l = invert_constants(&k);
        let forward = (k.c2 + k.c0 - 1.0).powi(2) - k.c1 * k.c1 * (1.0 - a0);
        let backward = (l.c2 + l.c0 - 1.0).powi(2) - l.c1 * l.c1 * (1.0 - b0);
        let scaled = forward / (k.c2 * k.c2);
        assert!(
            (backward - scaled).abs() <= 1e-10 * (1.0 + scaled.abs()),
            "k = {k:?}, a0 = {a0}"
        );
    }
}

#[test]
fn transitivity_of_the_worked_triple() {
    let g = grid();
    let a = example_a();
    let b = synthesize_pair(&a, &example_k(), &g, DEFAULT_TOL).unwrap();
    let c = synthesize_pair(&b, &example_m(), &g, DEFAULT_TOL).unwrap();

    let a = with_state(a, 1.0, -1.5);
    let b = with_state(b, 1.0, -1.5);
    let c = with_state(c, 1.0, -1.5);
    let report = check_transitivity(&a, &b, &c, &g, DEFAULT_TOL).unwrap();
    assert!(report.transitive);
    assert_eq!(report.ab.verdict, Verdict::CommutativeNonzeroIC);
    assert_eq!(report.bc.verdict, Verdict::CommutativeNonzeroIC);
    assert_eq!(report.ac.verdict, Verdict::CommutativeNonzeroIC);
    let p = report.composed.unwrap();
    assert!((p.c2 - 1.0).abs() <= 1e-10);
    assert!((p.c1 - 1.0).abs() <= 1e-10);
    assert!(p.c0.abs() <= 1e-10);
    assert!(report.offset_consistency_residual.unwrap() <= 1e-10);
    assert!(report.composed_offset_residual.unwrap() <= 1e-10);
}

#[test]
fn transitivity_with_zero_states() {
    let g = grid();
    let a = example_a();
    let b = synthesize_pair(&a, &example_k(), &g, DEFAULT_TOL).unwrap();
    let m = PairConstants::new(1.0, -1.0, 3.0).unwrap();
    let c = synthesize_pair(&b, &m, &g, DEFAULT_TOL).unwrap();
    let report = check_transitivity(&a, &b, &c, &g, DEFAULT_TOL).unwrap();
    assert!(report.transitive);
    assert_eq!(report.ab.verdict, Verdict::CommutativeZeroIC);
    assert_eq!(report.ac.verdict, Verdict::CommutativeZeroIC);
    let p = report.composed.unwrap();
    assert!((p.c1 + 3.0).abs() <= 1e-10);
    assert!((p.c0 - 4.0).abs() <= 1e-10);
    // the offset identities only apply to the unrelaxed case
    assert!(report.offset_consistency_residual.is_none());
}

#[test]
fn transitivity_fails_with_arbitrary_states() {
    let g = grid();
    let a = example_a();
    let b = synthesize_pair(&a, &example_k(), &g, DEFAULT_TOL).unwrap();
    let c = synthesize_pair(&b, &example_m(), &g, DEFAULT_TOL).unwrap();
    let a = with_state(a, 0.4, -0.3);
    let b = with_state(b, 0.2, -0.4);
    let c = with_state(c, -0.5, 0.5);
    let report = check_transitivity(&a, &b, &c, &g, DEFAULT_TOL).unwrap();
    assert!(!report.transitive);
    assert_eq!(report.ab.verdict, Verdict::NotCommutative);
    // structure rows still matched, so the composed constants exist
    assert!(report.composed.is_some());
}

#[test]
fn mismatched_initial_times_are_an_error() {
    let g = grid();
    let a = example_a();
    let mut b = synthesize_pair(&a, &example_k(), &g, DEFAULT_TOL).unwrap();
    b.t0 = 1.0;
    assert!(matches!(
        check_pair(&a, &b, &g, DEFAULT_TOL),
        Err(Error::InitialTimeMismatch(..))
    ));
}

#[test]
fn reports_serialize_to_json() {
    let g = grid();
    let a = example_a();
    let b = synthesize_pair(&a, &example_k(), &g, DEFAULT_TOL).unwrap();
    let report = check_pair(&a, &b, &g, DEFAULT_TOL).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    assert!(json.contains("\"CommutativeZeroIC\""));
    let back: CommutativityReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.verdict, report.verdict);
}
