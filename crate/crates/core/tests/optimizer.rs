use rand::Rng;

use dradapt::drtech::space::{HyperparamSpace, ParamDim, ParamKind};
use dradapt::optimize::{bayes_optimize, random_search, StopCriterion, StopReason};
use dradapt::rng;

/// A smooth 2-D landscape: a few gaussian bumps of random height and width.
struct Bumps(Vec<(f64, f64, f64, f64)>);

impl Bumps {
    fn random(seed: u64) -> Self {
        let mut r = rng::seeded(seed);
        Self(
            (0..r.random_range(1..4))
                .map(|_| {
                    (
                        r.random_range(-4.0..4.0),
                        r.random_range(-4.0..4.0),
                        r.random_range(0.3..1.0),
                        r.random_range(0.5..2.5),
                    )
                })
                .collect(),
        )
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        self.0
            .iter()
            .map(|&(cx, cy, h, w)| h * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * w * w)).exp())
            .sum()
    }
}

fn plane() -> HyperparamSpace {
    HyperparamSpace::new(vec![
        ParamDim::new("x", ParamKind::Real, -5.0, 5.0),
        ParamDim::new("y", ParamKind::Real, -5.0, 5.0),
    ])
    .unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    (v[v.len() / 2 - 1] + v[v.len() / 2]) / 2.0
}

#[test]
fn bayes_is_no_worse_than_random_on_smooth_objectives() {
    let space = plane();
    let (mut bo, mut rs) = (Vec::new(), Vec::new());
    for seed in 0..20 {
        let f = Bumps::random(seed);
        let obj = |h: &dradapt::drtech::HyperparamAssignment, _s: u64| Ok(f.at(h.real("x")?, h.real("y")?));
        bo.push(bayes_optimize(obj, &space, 50, seed, StopCriterion::None).unwrap().best_score());
        rs.push(random_search(obj, &space, 50, seed, StopCriterion::None).unwrap().best_score());
    }
    let (b, r) = (median(bo), median(rs));
    assert!(b >= r, "bayes median {b} < random median {r}");
}

#[test]
fn best_so_far_is_monotone_and_threshold_stops_early() {
    let f = Bumps::random(99);
    let obj = |h: &dradapt::drtech::HyperparamAssignment, _s: u64| Ok(f.at(h.real("x")?, h.real("y")?));
    let full = bayes_optimize(obj, &plane(), 30, 1, StopCriterion::None).unwrap();
    let curve = full.best_so_far();
    assert!(curve.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(full.stop_reason, StopReason::BudgetExhausted);

    // a threshold the full run reached partway must stop at that same trial
    let target = curve[15];
    let first_hit = curve.iter().position(|&v| v >= target).unwrap();
    let stopped = bayes_optimize(obj, &plane(), 30, 1, StopCriterion::Threshold { threshold: target }).unwrap();
    assert_eq!(stopped.len(), first_hit + 1);
    assert_eq!(stopped.stop_reason, StopReason::EarlyThreshold);
    for (a, b) in stopped.trials.iter().zip(&full.trials) {
        assert_eq!((&a.assignment, a.score), (&b.assignment, b.score));
    }
}
