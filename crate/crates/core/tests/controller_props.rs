//! Whole-run properties of the deliberation controller.

mod common;

use common::*;
use deliberate_core::decision::optimal_action;
use deliberate_core::{
    act_at_mean, expected_utility, parse_decision_problem, parse_network_text, run_case,
    threshold_pstar, Bounds, Policy, RunConfig, Status,
};
use proptest::prelude::*;

fn problem_text(u: &[f64], k: f64, evidence: Option<(usize, usize)>, meta: f64) -> String {
    let ev = evidence
        .map(|(v, s)| format!("V{v} = \"{s}\""))
        .unwrap_or_default();
    format!(
        r#"schema = 1
[hypothesis]
variable = "V3"
state = "1"
[evidence]
{ev}
[[action]]
name = "treat"
h1 = {{ u0 = {}, decay = {{ kind = "exp", k = {k} }} }}
h2 = {{ u0 = {} }}
[[action]]
name = "wait"
h1 = {{ u0 = {} }}
h2 = {{ u0 = {} }}
[clock]
cost_per_instantiation = 1.0
meta_cost = {meta}
"#,
        u[0], u[1], u[2], u[3]
    )
}

fn policy() -> impl Strategy<Value = Policy> {
    prop_oneof![
        Just(Policy::Myopic),
        Just(Policy::DominanceOnly),
        (2usize..5).prop_map(Policy::Lookahead)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn runs_are_well_formed(
        seed in any::<u64>(),
        n in 5usize..=10,
        u in prop::collection::vec(0.0..1.0f64, 4),
        k in 0.0..0.05f64,
        ev in prop::option::of((4usize..10, 0usize..2)),
        meta in 0.0..2.0f64,
        policy in policy(),
    ) {
        let net = random_loopy_network(seed, n, false);
        let ev = ev.map(|(v, s)| (v % n, s)).filter(|&(v, _)| v != 3);
        let spec = parse_decision_problem(&problem_text(&u, k, ev, meta)).unwrap();
        let config = RunConfig { policy, ..RunConfig::default() };
        let r = run_case(&net, &spec, &config).unwrap();

        prop_assert!(!r.trace.is_empty());
        let exact = enumerate_posterior(&net, (3, 1), &ev.into_iter().collect::<Vec<_>>()).unwrap();
        prop_assert!((r.exact_posterior.unwrap() - exact).abs() < 1e-9);
        for w in r.trace.windows(2) {
            prop_assert!(w[1].vtime > w[0].vtime);
            prop_assert!(w[1].lb >= w[0].lb && w[1].ub <= w[0].ub);
        }
        for rec in &r.trace {
            prop_assert!(rec.lb <= exact + 1e-12 && exact <= rec.ub + 1e-12);
            if policy == Policy::DominanceOnly {
                prop_assert!(rec.evc.is_none());
            }
        }
        prop_assert!(r.trace[..r.trace.len() - 1].iter().all(|x| x.status == Status::Continue));

        let last = r.trace.last().unwrap();
        let t = last.vtime;
        let b = Bounds::new(last.lb, last.ub);
        match r.halt_reason {
            Status::Dominant => {
                let a = r.recommendation_index;
                // the rival is never better anywhere on the final interval, nor at the exact posterior
                for p in [b.lb, b.ub, exact] {
                    prop_assert!(expected_utility(&r.problem, a, p, t) >= expected_utility(&r.problem, 1 - a, p, t) - 1e-12);
                }
                if let Some(ps) = threshold_pstar(&r.problem, (0, 1), t).p_star() {
                    prop_assert!(ps <= b.lb + 1e-12 || ps >= b.ub - 1e-12);
                }
                let best = optimal_action(&r.problem, exact, t);
                let tie = (expected_utility(&r.problem, 0, exact, t) - expected_utility(&r.problem, 1, exact, t)).abs() < 1e-12;
                prop_assert!(tie || best == a);
            }
            Status::Continue => prop_assert!(false, "run ended on continue"),
            _ => prop_assert_eq!(r.recommendation_index, act_at_mean(&r.problem, &b, t)),
        }
        if r.halt_reason == Status::Exhausted {
            prop_assert_eq!(r.final_bounds.width(), 0.0);
        }
    }
}

#[test]
fn alarm_fixture_acts_after_a_small_fraction() {
    let net = parse_network_text(&read_fixture("alarm.toml")).unwrap();
    for name in ["respiratory_steep", "chf_hypotensive"] {
        let spec = parse_decision_problem(&read_fixture(&format!("problems/{name}.toml"))).unwrap();
        let r = run_case(&net, &spec, &RunConfig::default()).unwrap();
        let fraction = r.halt_step as f64 / r.schedule_len as f64;
        assert!(fraction < 0.5, "{name}: {fraction}");
    }
}

#[test]
fn recorded_runs_replay_identically() {
    let net = parse_network_text(&read_fixture("twin_loops.toml")).unwrap();
    let spec = parse_decision_problem(&read_fixture("problems/twin_loops.toml")).unwrap();
    for policy in [Policy::Myopic, Policy::Lookahead(3), Policy::DominanceOnly] {
        let config = RunConfig { policy, ..RunConfig::default() };
        assert_eq!(run_case(&net, &spec, &config).unwrap(), run_case(&net, &spec, &config).unwrap());
    }
}
