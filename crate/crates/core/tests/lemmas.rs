use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use symcheck::catalog::{
    adjoint_closure, closure_parameters, euler_operator, lambda_mixing_chart, mixing_closure, qtilde1, qtilde2,
    TheoremOperator,
};
use symcheck::expr::{ratio, RatFn, Symbol, DEFAULT_SEED};
use symcheck::invariance::qcond_check;
use symcheck::symmetry::{equivalent_families, indeps_of, is_involutive};

fn families() -> Vec<TheoremOperator> {
    vec![
        qtilde1(2).unwrap(),
        qtilde1(3).unwrap(),
        qtilde2(2).unwrap(),
        euler_operator().unwrap(),
    ]
}

fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x1e44a),
        failure_persistence: None,
        ..Config::default()
    }
}

#[test]
fn every_family_passes_before_mixing() {
    for op in families() {
        let r = qcond_check(&op.system, &op.family, &op.constraints, &op.chart, DEFAULT_SEED).unwrap();
        assert!(r.is_invariant(), "{}: {r}", op.id);
    }
}

#[test]
fn mixing_matrices_are_invertible_triangular() {
    let vars = [Symbol::indep("x1"), Symbol::dep("u")];
    for seed in 0..40 {
        for l in 1..=3 {
            let (m, chart) = lambda_mixing_chart(seed, l, &vars).unwrap();
            for i in 0..l {
                assert!(m[i][..i].iter().all(RatFn::is_zero));
                assert!(chart.is_nonvanishing(&m[i][i]), "seed {seed}");
            }
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn mixing_preserves_conditional_invariance(seed in any::<u64>()) {
        for op in families() {
            let r = mixing_closure(&op, seed, 0).unwrap();
            prop_assert!(r.is_invariant(), "{} under mixing {}: {}", op.id, seed, r);
        }
    }

    #[test]
    fn mixing_preserves_the_span(seed in any::<u64>()) {
        for op in families() {
            let vars = [Symbol::indep(&op.system.space.indeps[1]), Symbol::dep(&op.system.space.deps[0])];
            let (m, _) = lambda_mixing_chart(seed, op.family.len(), &vars).unwrap();
            let mixed = op.family.mixed(&m);
            let indeps = indeps_of(&op.system.space);
            prop_assert!(equivalent_families(&op.family, &mixed, &indeps, &op.constraints).unwrap());
            prop_assert!(is_involutive(&mixed, &indeps, &op.constraints).unwrap().is_some());
        }
    }

    #[test]
    fn flows_at_random_rational_parameters_preserve_invariance(p in -7i64..=7, q in 1i64..=5) {
        prop_assume!(p != 0);
        let eps = RatFn::constant(ratio(p, q));
        let op = qtilde1(2).unwrap();
        for g in 0..op.closure.len() {
            if !op.closure[g].field.has_flow() {
                continue;
            }
            let r = adjoint_closure(&op, g, &eps, DEFAULT_SEED).unwrap();
            prop_assert!(r.is_invariant(), "{} at eps = {}: {}", op.closure[g].field.name, eps, r);
        }
    }
}

#[test]
fn every_stored_flow_preserves_every_family() {
    let params = closure_parameters();
    assert_eq!(params.len(), 4);
    for op in families() {
        let mut flows = 0;
        for g in 0..op.closure.len() {
            if !op.closure[g].field.has_flow() {
                continue;
            }
            flows += 1;
            for eps in &params {
                let r = adjoint_closure(&op, g, eps, DEFAULT_SEED).unwrap();
                assert!(
                    r.is_invariant(),
                    "{} under {} at eps = {eps}: {r}",
                    op.id,
                    op.closure[g].field.name
                );
            }
        }
        assert!(flows > 0, "{}", op.id);
    }
}
