//! Desk-scale training experiments on the synthetic logistic-regression
//! problem: multi-seed comparisons that are too slow for unit tests but
//! establish the orderings the refinement workflow is built around.

use schedkit::lab::{run_adam_like, run_sgd, Problem};
use schedkit::refine::{
    refine, NormKind, RefinementConfig, Weighting, ZeroPolicy,
};
use schedkit::{make_schedule, ScheduleKind};

const SEEDS: std::ops::Range<u64> = 0..5;

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[test]
fn linear_decay_beats_constant_rate_on_logreg() {
    let problem = Problem::synthetic_logreg(512, 10, 7).unwrap();
    let horizon = 800;
    let scale = 0.3;
    let linear = make_schedule(&ScheduleKind::Linear, horizon).unwrap();
    let constant = make_schedule(&ScheduleKind::Constant, horizon).unwrap();
    let mut linear_losses = Vec::new();
    let mut constant_losses = Vec::new();
    for seed in SEEDS {
        linear_losses.push(
            run_sgd(&problem, &linear, scale, horizon, seed)
                .unwrap()
                .report
                .final_loss,
        );
        constant_losses.push(
            run_sgd(&problem, &constant, scale, horizon, seed)
                .unwrap()
                .report
                .final_loss,
        );
    }
    let (linear_mean, constant_mean) = (mean(&linear_losses), mean(&constant_losses));
    assert!(
        linear_mean <= constant_mean,
        "linear {linear_mean} vs constant {constant_mean}"
    );
}

#[test]
fn l1_refined_schedule_keeps_pace_with_linear_under_adam() {
    // two-phase protocol: run the linear baseline, refine from its l1
    // gradient log, rerun with the refined schedule on the same seeds
    let problem = Problem::synthetic_logreg(512, 10, 7).unwrap();
    let horizon = 800;
    let scale = 0.01;
    let beta2 = 0.95;
    let linear = make_schedule(&ScheduleKind::Linear, horizon).unwrap();
    let config = RefinementConfig {
        tau: 0.1,
        weighting: Weighting::for_kind(NormKind::L1),
        zero_policy: ZeroPolicy::Clamp {
            epsilon_fraction: 1e-6,
        },
    };
    let mut linear_losses = Vec::new();
    let mut refined_losses = Vec::new();
    for seed in SEEDS {
        let base = run_adam_like(&problem, &linear, scale, horizon, seed, beta2).unwrap();
        let l1_log = base.l1_log.as_ref().expect("adaptive runs log l1 norms");
        let refined_schedule = refine(l1_log, &config).unwrap().schedule;
        let refined =
            run_adam_like(&problem, &refined_schedule, scale, horizon, seed, beta2).unwrap();
        linear_losses.push(base.report.final_loss);
        refined_losses.push(refined.report.final_loss);
    }
    let (linear_mean, refined_mean) = (mean(&linear_losses), mean(&refined_losses));
    assert!(
        refined_mean <= linear_mean * 1.02,
        "refined {refined_mean} vs linear {linear_mean}"
    );
}
