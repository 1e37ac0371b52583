mod common;

use clan::loss::{LossConfig, LossKind};
use clan::model::{backward_with_input, forward, init};
use common::{gradient_pair, layers_f64, max_relative_error, GradInstance, Objective};
use proptest::prelude::*;

const CLEARANCE: f64 = 1e-4;
const FLOOR: f64 = 1e-2;

fn check(seed: u64, pick: u8) -> std::result::Result<(), TestCaseError> {
    let inst = GradInstance::random(&mut common::rng(seed), pick);
    let params = init(&inst.config).unwrap();
    prop_assume!(inst.kink_clearance(&layers_f64(&params)) >= CLEARANCE);
    let (a, n) = gradient_pair(&inst, &params);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = max_relative_error(&a, &n, FLOOR * scale);
    prop_assert!(err < 1e-4, "relative error {err:e} for {inst:?}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn clan_loss_gradient_matches_finite_differences(seed in any::<u64>()) {
        check(seed, 0)?;
    }

    #[test]
    fn baseline_loss_gradient_matches_finite_differences(seed in any::<u64>()) {
        check(seed, 1)?;
    }
}

#[test]
fn input_gradient_matches_finite_differences() {
    // ∂L/∂x through the encoder, with the other view held fixed
    let mut rng = common::rng(11);
    let mut checked = 0;
    while checked < 10 {
        let inst = GradInstance::random(&mut rng, 0);
        let params = init(&inst.config).unwrap();
        let layers = layers_f64(&params);
        if inst.kink_clearance(&layers) < CLEARANCE {
            continue;
        }
        let Objective::Clan { margin } = inst.objective else { unreachable!() };
        let cfg = LossConfig { metric: inst.metric, margin, temperature: 1.0 };
        let (z, cache) = forward(&params, &inst.x).unwrap();
        let zo = clan::model::encode(&params, &inst.x_other).unwrap();
        let out = LossKind::Clan.evaluate(&z, &zo, &cfg).unwrap();
        let (_, gx) = backward_with_input(&params, &cache, &out.grad_z).unwrap();

        let zo64 = common::to_f64(&zo);
        let x64 = common::to_f64(&inst.x);
        let loss = |x: &[Vec<f64>]| {
            let z = common::forward_oracle(&layers, x);
            common::clan_loss_oracle(inst.metric, margin, &z, &zo64)
        };
        let h = 1e-6;
        let mut numeric = Vec::new();
        for i in 0..x64.len() {
            for j in 0..x64[0].len() {
                let mut p = x64.clone();
                p[i][j] += h;
                let mut m = x64.clone();
                m[i][j] -= h;
                numeric.push((loss(&p) - loss(&m)) / (2.0 * h));
            }
        }
        let analytic: Vec<f64> = gx.as_slice().iter().map(|&v| v as f64).collect();
        let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = max_relative_error(&analytic, &numeric, FLOOR * scale);
        assert!(err < 1e-4, "input gradient error {err:e}");
        checked += 1;
    }
}
