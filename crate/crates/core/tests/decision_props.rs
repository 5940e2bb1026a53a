//! Properties of utility models, the threshold calculus and EVC.

mod common;

use std::collections::BTreeMap;

use common::*;
use deliberate_core::decision::{optimal_action, ActionUtilities};
use deliberate_core::utility::{Comparator, Parameter, Segment};
use deliberate_core::{
    act_at_mean, check_dominance, customize, evc_bc, evc_lookahead, evc_myopic,
    expected_utility, fit_decay, lottery_loss, predict_bounds, threshold_pstar, CostSchedule,
    CriticalityRule, Decay, DecayForm, DecayLaw, DecisionProblem, InferenceSession,
    LotteryAssessment, OutcomeUtility, ProbabilityBounds, VirtualClock,
};
use proptest::prelude::*;

fn law() -> impl Strategy<Value = DecayLaw<f64>> {
    prop_oneof![
        Just(DecayLaw::Constant),
        (0.0..0.05f64).prop_map(|k| DecayLaw::Exponential { k }),
        (0.0..0.01f64, 0.0..0.5f64).prop_map(|(c, floor)| DecayLaw::Linear { c, floor }),
    ]
}

fn outcome() -> impl Strategy<Value = OutcomeUtility<f64>> {
    let single = (0.0..1.0f64, law()).prop_map(|(u0, l)| OutcomeUtility {
        u0,
        decay: Decay::Law(l),
    });
    let piecewise = (0.0..1.0f64, prop::collection::vec((0.1..50.0f64, law()), 1..4)).prop_map(
        |(u0, parts)| {
            let mut start = 0.0;
            let segments = parts
                .into_iter()
                .map(|(gap, law)| {
                    let s = Segment { start, law };
                    start += gap;
                    s
                })
                .collect();
            OutcomeUtility {
                u0,
                decay: Decay::Piecewise(segments),
            }
        },
    );
    prop_oneof![single, piecewise]
}

fn problem() -> impl Strategy<Value = DecisionProblem<f64>> {
    (outcome(), outcome(), outcome(), outcome()).prop_map(|(a, b, c, d)| {
        DecisionProblem::new(vec![
            ActionUtilities { name: "A1".into(), h1: a, h2: b },
            ActionUtilities { name: "A2".into(), h1: c, h2: d },
        ])
        .unwrap()
    })
}

fn constant_problem(u: [f64; 4]) -> DecisionProblem<f64> {
    DecisionProblem::new(vec![
        ActionUtilities {
            name: "A1".into(),
            h1: OutcomeUtility::constant(u[0]),
            h2: OutcomeUtility::constant(u[1]),
        },
        ActionUtilities {
            name: "A2".into(),
            h1: OutcomeUtility::constant(u[2]),
            h2: OutcomeUtility::constant(u[3]),
        },
    ])
    .unwrap()
}

fn scaled(dp: &DecisionProblem<f64>, c: f64) -> DecisionProblem<f64> {
    let scale = |o: &OutcomeUtility<f64>| OutcomeUtility {
        u0: o.u0 * c,
        decay: match &o.decay {
            // linear slopes and floors scale with the utility; rates do not
            Decay::Law(DecayLaw::Linear { c: s, floor }) => Decay::Law(DecayLaw::Linear {
                c: s * c,
                floor: floor * c,
            }),
            Decay::Piecewise(segs) => Decay::Piecewise(
                segs.iter()
                    .map(|s| Segment {
                        start: s.start,
                        law: match s.law {
                            DecayLaw::Linear { c: sl, floor } => DecayLaw::Linear {
                                c: sl * c,
                                floor: floor * c,
                            },
                            ref l => l.clone(),
                        },
                    })
                    .collect(),
            ),
            d => d.clone(),
        },
    };
    DecisionProblem::new(
        dp.actions()
            .iter()
            .map(|a| ActionUtilities {
                name: a.name.clone(),
                h1: scale(&a.h1),
                h2: scale(&a.h2),
            })
            .collect(),
    )
    .unwrap()
}

fn bounds() -> impl Strategy<Value = ProbabilityBounds<f64>> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| ProbabilityBounds::new(a.min(b), a.max(b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn utility_nonincreasing_and_nonnegative(o in outcome(), t1 in 0.0..200.0f64, t2 in 0.0..200.0f64) {
        let (a, b) = (t1.min(t2), t1.max(t2));
        let (ua, ub) = (o.utility_at(a).unwrap(), o.utility_at(b).unwrap());
        prop_assert!(ub >= 0.0);
        prop_assert!(ub <= ua + 1e-15);
    }

    #[test]
    fn piecewise_continuous_at_boundaries(o in outcome()) {
        if let Decay::Piecewise(segs) = &o.decay {
            for s in &segs[1..] {
                let left = o.utility_at(s.start - 1e-9).unwrap();
                let right = o.utility_at(s.start).unwrap();
                // the slope is bounded by 0.05, so 1e-9 to the left moves at most 5e-11
                prop_assert!((left - right).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fit_recovers_exponential(u0 in 1_000.0..100_000.0f64, k in 1e-4..1e-2f64, p0 in 0.0..0.1f64) {
        let times = [0.0, 30.0, 60.0, 120.0, 300.0];
        let pts: Vec<(f64, f64)> = times
            .iter()
            .map(|&t| (t, p0 + (u0 - u0 * (-k * t).exp()) * 1e-6))
            .collect();
        let a = LotteryAssessment::new(pts).unwrap();
        let fitted = fit_decay(&a, u0, DecayForm::Exp).unwrap();
        match fitted.decay {
            Decay::Law(DecayLaw::Exponential { k: got }) => prop_assert!(((got - k) / k).abs() < 1e-6),
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn fit_recovers_linear(u0 in 1_000.0..100_000.0f64, c in 0.1..100.0f64, p0 in 0.0..0.1f64) {
        let times = [0.0, 10.0, 45.0, 90.0];
        let pts: Vec<(f64, f64)> = times.iter().map(|&t| (t, p0 + c * t * 1e-6)).collect();
        let a = LotteryAssessment::new(pts).unwrap();
        let fitted = fit_decay(&a, u0, DecayForm::Linear).unwrap();
        match fitted.decay {
            Decay::Law(DecayLaw::Linear { c: got, .. }) => prop_assert!(((got - c) / c).abs() < 1e-6),
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn lottery_loss_is_additive(ps in prop::collection::vec(0.0..0.01f64, 3..6)) {
        let mut acc = 0.0;
        let pts: Vec<(f64, f64)> = ps
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                acc += d;
                (i as f64 * 10.0, acc)
            })
            .collect();
        let a = LotteryAssessment::new(pts.clone()).unwrap();
        for i in 0..pts.len() {
            for j in i..pts.len() {
                for k in j..pts.len() {
                    let (t1, t2, t3) = (pts[i].0, pts[j].0, pts[k].0);
                    let lhs = lottery_loss(&a, t1, t2).unwrap() + lottery_loss(&a, t2, t3).unwrap();
                    prop_assert!((lhs - lottery_loss(&a, t1, t3).unwrap()).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn customize_idempotent(
        u in prop::collection::vec(0.0..1.0f64, 4),
        thresholds in prop::collection::vec(60.0..140.0f64, 3),
        bp in prop::option::of(50.0..150.0f64),
    ) {
        let mut utilities = BTreeMap::new();
        for (i, key) in [("a", "h1"), ("a", "h2"), ("b", "h1"), ("b", "h2")].iter().enumerate() {
            utilities.insert((key.0.to_string(), key.1.to_string()), OutcomeUtility::exponential(u[i], 0.001));
        }
        let rule = |th: f64, cmp, p, v| CriticalityRule {
            vital: "systolicBP".into(),
            comparator: cmp,
            threshold: th,
            target: ("a".into(), "h1".into()),
            parameter: p,
            new_value: v,
        };
        let rules = vec![
            rule(thresholds[0], Comparator::Lt, Parameter::K, 0.008),
            rule(thresholds[1], Comparator::Ge, Parameter::C, 0.002),
            rule(thresholds[2], Comparator::Le, Parameter::U0, 0.5),
        ];
        let vitals: BTreeMap<String, f64> = bp.into_iter().map(|v| ("systolicBP".to_string(), v)).collect();
        let (once, _) = customize(&utilities, &rules, &vitals);
        let (twice, _) = customize(&once, &rules, &vitals);
        prop_assert_eq!(&once, &twice);
        if bp.is_none() {
            prop_assert_eq!(&once, &utilities);
        }
    }

    #[test]
    fn threshold_equalizes_expected_utility(dp in problem(), t in 0.0..100.0f64) {
        let r = threshold_pstar(&dp, (0, 1), t);
        if let Some(p) = r.p_star() {
            let gap = expected_utility(&dp, 0, p, t) - expected_utility(&dp, 1, p, t);
            prop_assert!(gap.abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_preserves_choice(dp in problem(), c in 0.1..10.0f64, t in 0.0..100.0f64, p in 0.0..1.0f64) {
        let big = scaled(&dp, c);
        let a = threshold_pstar(&dp, (0, 1), t).p_star();
        let b = threshold_pstar(&big, (0, 1), t).p_star();
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9),
            (None, None) => {}
            // a crossing within rounding of an endpoint or of parallel may flip
            (x, y) => prop_assert!(x.or(y).is_none_or(|q| !(1e-9..=1.0 - 1e-9).contains(&q)), "{x:?} vs {y:?}"),
        }
        let gap = (expected_utility(&dp, 0, p, t) - expected_utility(&dp, 1, p, t)).abs();
        if gap > 1e-9 {
            let iv = ProbabilityBounds::point(p);
            prop_assert_eq!(act_at_mean(&dp, &iv, t), act_at_mean(&big, &iv, t));
        }
    }

    #[test]
    fn dominance_is_sound(dp in problem(), b in bounds(), t in 0.0..100.0f64) {
        if let Some(a) = check_dominance(&dp, &b, t) {
            let other = 1 - a;
            for i in 0..=1000 {
                let p = b.lb + (b.ub - b.lb) * i as f64 / 1000.0;
                let d = expected_utility(&dp, other, p, t) - expected_utility(&dp, a, p, t);
                prop_assert!(d <= 1e-12, "p = {p}, margin {d}");
            }
        }
    }

    #[test]
    fn no_refinement_never_pays(dp in problem(), b in bounds(), t in 0.0..100.0f64, delay in 0.0..50.0f64) {
        prop_assert!(evc_bc(&dp, &b, t, delay, 0.0).evc <= 1e-15);
    }

    #[test]
    fn refinement_pays_when_time_is_free(
        u in prop::collection::vec(0.0..1.0f64, 4),
        a in 0.0..1.0f64,
        b in 0.0..1.0f64,
        lambda in 0.01..1.0f64,
        delay in 0.0..10.0f64,
    ) {
        // orient the lines so they cross inside (0, 1)
        let dp = constant_problem([u[0].max(u[2]) + 0.01, u[1].min(u[3]), u[0].min(u[2]), u[1].max(u[3]) + 0.01]);
        let p = threshold_pstar(&dp, (0, 1), 0.0).p_star().unwrap();
        let (l, h) = (a * p, p + b * (1.0 - p));
        prop_assume!(l < p - 1e-6 && h > p + 1e-6);
        let r = evc_bc(&dp, &ProbabilityBounds::new(l, h), 3.0, delay, lambda);
        prop_assert!(r.evc > 0.0, "{r:?}");
    }
}

fn bisect(dp: &DecisionProblem<f64>, t: f64) -> Option<f64> {
    let f = |p: f64| expected_utility(dp, 0, p, t) - expected_utility(dp, 1, p, t);
    let (mut lo, mut hi) = (0.0, 1.0);
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Some(0.0);
    }
    if fhi == 0.0 {
        return Some(1.0);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn threshold_matches_bisection(dp in problem(), t in 0.0..100.0f64) {
        let closed = threshold_pstar(&dp, (0, 1), t).p_star();
        match (closed, bisect(&dp, t)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9),
            (None, None) => {}
            (a, b) => {
                // disagreement only for near-parallel lines
                let gap = |p: f64| (expected_utility(&dp, 0, p, t) - expected_utility(&dp, 1, p, t)).abs();
                prop_assert!(gap(0.0).min(gap(1.0)) < 1e-9, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn threshold_drifts_up_as_a1h1_decays(
        u in prop::collection::vec(0.0..1.0f64, 4),
        k in 0.0..0.05f64,
        t1 in 0.0..100.0f64,
        t2 in 0.0..100.0f64,
    ) {
        let dp = DecisionProblem::new(vec![
            ActionUtilities {
                name: "A1".into(),
                h1: OutcomeUtility::exponential(u[0].max(u[2]) + 0.01, k),
                h2: OutcomeUtility::constant(u[1].min(u[3])),
            },
            ActionUtilities {
                name: "A2".into(),
                h1: OutcomeUtility::constant(u[0].min(u[2])),
                h2: OutcomeUtility::constant(u[1].max(u[3]) + 0.01),
            },
        ])
        .unwrap();
        let (a, b) = (t1.min(t2), t1.max(t2));
        if let (Some(pa), Some(pb)) = (
            threshold_pstar(&dp, (0, 1), a).p_star(),
            threshold_pstar(&dp, (0, 1), b).p_star(),
        ) {
            prop_assert!(pb >= pa - 1e-12);
        }
    }
}

fn clock(meta: f64) -> VirtualClock<f64> {
    VirtualClock::new(CostSchedule::Uniform(1.0), meta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prediction_and_lookahead(seed in any::<u64>(), n in 4usize..=10, dp in problem(), meta in 0.0..2.0f64) {
        let net = random_loopy_network(seed, n, false);
        let mut s = InferenceSession::new(&net, evidence_of(&[]), (3, 1), clock(meta)).unwrap();
        while !s.is_exhausted() {
            let w = s.bounds().width();
            for h in 1..=s.remaining_steps() {
                prop_assert!(predict_bounds(&s, h).unwrap().predicted_width <= w + 1e-12);
            }
            let t = s.clock.now();
            let my = evc_myopic(&dp, &s, t).unwrap().evc;
            for k in 1..=4 {
                prop_assert!(evc_lookahead(&dp, &s, t, k).unwrap().evc >= my);
            }
            s.refine_step().unwrap();
        }
    }
}

#[test]
fn symmetric_matrix_threshold_is_one_half() {
    let dp = constant_problem([1.0, 0.0, 0.0, 1.0]);
    assert_eq!(threshold_pstar(&dp, (0, 1), 0.0).p_star(), Some(0.5));
    let dp = constant_problem([0.7, 0.2, 0.2, 0.7]);
    assert_eq!(threshold_pstar(&dp, (0, 1), 0.0).p_star(), Some(0.5));
}

#[test]
fn optimal_action_ties_break_low() {
    let dp = constant_problem([0.5, 0.5, 0.5, 0.5]);
    assert_eq!(optimal_action(&dp, 0.3, 0.0), 0);
}
