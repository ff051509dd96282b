use proptest::prelude::*;

use netsir_core::analysis::{area, efficiency, pearson, peak};
use netsir_core::baselines::{centrality_allocation, dra_allocate, dra_priority, maxcut, Sign};
use netsir_core::centrality::{betweenness_centrality, closeness_centrality, Metric};
use netsir_core::control::{enforce_budget, ControlTrajectory};
use netsir_core::graph::{spectral_radius, Graph};
use netsir_core::sir::{
    controlled_reproduction_number, integrate, integrate_with_rule, rhs_controlled, rhs_uncontrolled,
    NodeState, RateRule, SirParams,
};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |e| Graph::from_edges(n, e).unwrap())
    })
}

fn state_strategy(n: usize) -> impl Strategy<Value = NodeState> {
    proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64), n).prop_map(|v| {
        let mut st = NodeState::zeros(v.len());
        for (k, (a, b)) in v.into_iter().enumerate() {
            st.i[k] = a * b;
            st.r[k] = (1.0 - a) * b;
            st.s[k] = 1.0 - st.i[k] - st.r[k];
        }
        st
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_sum_is_twice_edges(g in graph_strategy(30)) {
        prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.edge_count());
    }

    #[test]
    fn spectral_radius_between_mean_and_max_degree(g in graph_strategy(25)) {
        let rho = spectral_radius(&g, 1e-12).unwrap();
        prop_assert!(rho >= g.mean_degree() - 1e-8);
        prop_assert!(rho <= g.max_degree() as f64 + 1e-8);
    }

    #[test]
    fn centralities_follow_relabelling(g in graph_strategy(12), seed in any::<u64>()) {
        let n = g.node_count();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut x = seed;
        for i in (1..n).rev() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (x >> 33) as usize % (i + 1));
        }
        let h = g.permuted(&perm).unwrap();
        for m in Metric::ALL {
            if n < 3 && m != Metric::Dc && m != Metric::Cc {
                continue;
            }
            let a = m.compute(&g, 6).unwrap();
            let b = m.compute(&h, 6).unwrap();
            for v in 0..n {
                prop_assert!((a.values[v] - b.values[perm[v]]).abs() < 1e-12, "{} at {}", m, v);
            }
        }
    }

    #[test]
    fn betweenness_and_closeness_in_unit_interval(g in graph_strategy(15)) {
        prop_assume!(g.node_count() >= 3);
        for v in betweenness_centrality(&g).unwrap().values.into_iter().chain(closeness_centrality(&g).unwrap().values) {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn controlled_rhs_conserves_and_reduces_to_uncontrolled(
        g in graph_strategy(15),
        seed_state in state_strategy(15),
        w in proptest::collection::vec(0.0..=1.0f64, 15),
    ) {
        let n = g.node_count();
        let st = NodeState { s: seed_state.s[..n].to_vec(), i: seed_state.i[..n].to_vec(), r: seed_state.r[..n].to_vec() };
        let p = SirParams::default();
        let d = rhs_controlled(&st, &w[..n], &p, &g).unwrap();
        for v in 0..n {
            prop_assert!((d.s[v] + d.i[v] + d.r[v]).abs() < 1e-15);
        }
        prop_assert_eq!(rhs_controlled(&st, &vec![0.0; n], &p, &g).unwrap(), rhs_uncontrolled(&st, &p, &g));
    }

    #[test]
    fn uniform_control_matches_rescaled_rates(g in graph_strategy(12), a in 0.0..=1.0f64) {
        let n = g.node_count();
        let p = SirParams { beta0: 0.4, gamma0: 0.2, u: 0.7, ..SirParams::default() };
        let init = NodeState::uniform(n, 0.1).unwrap();
        let controlled = integrate(&init, Some(&ControlTrajectory::constant(&vec![a; n], &p)), &p, &g).unwrap();
        let scaled = SirParams { beta0: p.beta0 * (1.0 - p.u * a), gamma0: p.gamma0 * (1.0 + p.u * a), ..p };
        let plain = integrate(&init, None, &scaled, &g).unwrap();
        for (x, y) in controlled.states.iter().zip(&plain.states) {
            for v in 0..n {
                prop_assert!((x.i[v] - y.i[v]).abs() < 1e-12);
                prop_assert!((x.s[v] - y.s[v]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn more_weight_never_raises_reproduction_number(
        g in graph_strategy(10),
        w in proptest::collection::vec(0.0..=1.0f64, 10),
        node in 0usize..10,
        bump in 0.0..=1.0f64,
    ) {
        let n = g.node_count();
        let p = SirParams::default();
        let base = &w[..n];
        let mut more = base.to_vec();
        let v = node % n;
        more[v] = (more[v] + bump).min(1.0);
        let r0 = controlled_reproduction_number(base, &p, &g).unwrap();
        let r1 = controlled_reproduction_number(&more, &p, &g).unwrap();
        prop_assert!(r1 <= r0 * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn budget_step_is_feasible_and_complementary(
        cand in proptest::collection::vec(-2.0..3.0f64, 1..40),
        w_total in 0.0..10.0f64,
        c in 0.05..5.0f64,
    ) {
        let (w, l4) = enforce_budget(&cand, w_total, c).unwrap();
        prop_assert!(l4 >= 0.0);
        prop_assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let total: f64 = w.iter().sum();
        prop_assert!(total <= w_total + 1e-9);
        prop_assert!(l4 == 0.0 || (total - w_total).abs() < 1e-8, "λ4 = {l4}, sum {total} vs {w_total}");
        // common shift: every interior weight sits at ŵ - λ4/c
        for (x, v) in w.iter().zip(&cand) {
            if *x > 1e-9 && *x < 1.0 - 1e-9 {
                prop_assert!((x - (v - l4 / c)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn centrality_allocation_spends_budget_with_right_sign(
        values in proptest::collection::vec(0.0..5.0f64, 3..30),
        w_total in 0.0..40.0f64,
        plus in any::<bool>(),
    ) {
        let n = values.len();
        let g = Graph::path(n);
        let metric = netsir_core::centrality::CentralityVector { metric: Metric::Dc, values: values.clone() };
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let w = centrality_allocation(&g, &metric, sign, w_total).unwrap();
        prop_assert!(w.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
        prop_assert!((w.iter().sum::<f64>() - w_total.min(n as f64)).abs() < 1e-9);
        if let Some(r) = pearson(&w, &values).unwrap() {
            if plus { prop_assert!(r >= -1e-9); } else { prop_assert!(r <= 1e-9); }
        }
    }

    #[test]
    fn treatment_has_one_fractional_weight(
        st in state_strategy(20),
        w_total in 0.0..8.0f64,
        threshold in 0.0..=1.0f64,
        seed in any::<u64>(),
    ) {
        let g = Graph::cycle(20);
        let order = dra_priority(&g, 2, seed).unwrap();
        let w = dra_allocate(&order, &st, w_total, threshold).unwrap();
        prop_assert!(w.iter().filter(|&&x| x > 0.0 && x < 1.0).count() <= 1);
        prop_assert!(w.iter().sum::<f64>() <= w_total + 1e-12);
        for v in 0..20 {
            if w[v] > 0.0 { prop_assert!(st.i[v] >= threshold); }
        }
    }

    #[test]
    fn priority_is_a_permutation(g in graph_strategy(20), seed in any::<u64>()) {
        let order = dra_priority(&g, 4, seed).unwrap();
        let mut sorted = order.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..g.node_count()).collect::<Vec<_>>());
        prop_assert!(maxcut(&g, &order) <= g.edge_count());
    }

    #[test]
    fn pearson_affine_invariance(
        xy in proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..30),
        a in 0.1..10.0f64, b in -5.0..5.0f64,
    ) {
        let x: Vec<f64> = xy.iter().map(|p| p.0).collect();
        let y: Vec<f64> = xy.iter().map(|p| p.1).collect();
        let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        match (pearson(&x, &y).unwrap(), pearson(&x2, &y).unwrap()) {
            (Some(r), Some(s)) => prop_assert!((r - s).abs() < 1e-9),
            (None, None) => {}
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn efficiency_scaling(values in proptest::collection::vec(0.01..10.0f64, 2..14), s in 0.1..10.0f64) {
        let e = efficiency(&values).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * s).collect();
        let f = efficiency(&scaled).unwrap();
        prop_assert!((f.delta - s * e.delta).abs() < 1e-9 * (1.0 + s * e.delta));
        prop_assert!((f.p - e.p).abs() < 1e-9);
        prop_assert!(e.delta >= 0.0 && e.p >= 0.0);
    }

    #[test]
    fn area_and_peak_bounded(g in graph_strategy(20), i0 in 0.0..=1.0f64, beta in 0.0..2.0f64) {
        let p = SirParams { beta0: beta, ..SirParams::default() };
        let traj = integrate(&NodeState::uniform(g.node_count(), i0).unwrap(), None, &p, &g).unwrap();
        prop_assert!(peak(&traj).unwrap() <= 1.0 + 1e-9);
        prop_assert!(area(&traj).unwrap() <= p.horizon + 1e-9);
    }

    #[test]
    fn dominated_infection_has_smaller_area(g in graph_strategy(20), a in 0.0..=1.0f64) {
        let p = SirParams { beta0: 0.5, ..SirParams::default() };
        let init = NodeState::uniform(g.node_count(), 0.1).unwrap();
        let free = integrate(&init, None, &p, &g).unwrap();
        let held = integrate(&init, Some(&ControlTrajectory::constant(&vec![a; g.node_count()], &p)), &p, &g).unwrap();
        let (fm, hm) = (free.mean_infected(), held.mean_infected());
        prop_assume!(fm.iter().zip(&hm).all(|(f, h)| h <= f));
        prop_assert!(area(&held).unwrap() <= area(&free).unwrap());
    }

    #[test]
    fn treatment_rule_conserves(g in graph_strategy(20), w in proptest::collection::vec(0.0..=1.0f64, 20)) {
        let n = g.node_count();
        let p = SirParams { beta0: 0.6, ..SirParams::default() };
        let init = NodeState::uniform(n, 0.2).unwrap();
        let traj = integrate_with_rule(&init, Some(&ControlTrajectory::constant(&w[..n], &p)), RateRule::Treatment, &p, &g).unwrap();
        for st in &traj.states {
            for v in 0..n {
                prop_assert!((st.s[v] + st.i[v] + st.r[v] - 1.0).abs() < 1e-9);
            }
        }
    }
}
