//! Cross-module invariants tying truncated execution, the exact solver,
//! and the certificate checker together.

use std::collections::BTreeMap;

use phl::analysis::{
    check_certificate, expected_post_cost, solve_expected_cost, NodeCost, PostPotential,
    PotentialCertificate,
};
use phl::exec::{explore_graph, step_n, Config, ExploreLimits, Scheduler};
use phl::rat::{rat, rat_int, Rat};
use phl::syntax::{parse_program, Expr, Val};

const COIN_TOSS: &str =
    "(rec toss _ := tick 1 ;; (if ChooseUniform [true, false] = false then toss ())) ()";

const PROGRAMS: &[&str] = &[
    COIN_TOSS,
    "tick 3 ;; tick 4",
    "if ChooseUniform [true, false] then tick 0.5 else (tick 1 ;; tick 0.5)",
];

fn solved(src: &str) -> (phl::exec::ConfigGraph, Vec<NodeCost>, Rat) {
    let e = parse_program(src).unwrap();
    let g = explore_graph(&e, Some(&Scheduler::Leftmost), ExploreLimits::default()).unwrap();
    let costs = solve_expected_cost(&g).unwrap();
    let NodeCost::Expected(initial) = costs[0].clone() else {
        panic!("program does not terminate a.s.: {src}");
    };
    (g, costs, initial)
}

/// The exact solution, used as node potentials with the initial value as
/// the bound, is itself an accepted certificate.
#[test]
fn exact_solution_is_a_certificate() {
    for src in PROGRAMS {
        let (g, costs, initial) = solved(src);
        let node_potentials: BTreeMap<usize, Rat> = costs
            .iter()
            .enumerate()
            .map(|(id, c)| match c {
                NodeCost::Expected(r) => (id, r.clone()),
                _ => unreachable!(),
            })
            .collect();
        let cert = PotentialCertificate {
            node_potentials,
            claimed_bound: initial,
            post: PostPotential::zero(),
        };
        let report = check_certificate(&g, &cert).unwrap();
        assert!(report.accepted, "{src}: {:?}", report.violations);
    }
}

/// Truncated expected cost stays below the exact limit and converges to it.
#[test]
fn truncations_converge_to_the_solution() {
    let (_, _, exact) = solved(COIN_TOSS);
    let e = parse_program(COIN_TOSS).unwrap();
    let post = PostPotential::zero();
    let mut prev = rat_int(0);
    for n in (0..=220).step_by(20) {
        let mu = step_n(&Config::initial(e.clone()), n, &Scheduler::Leftmost);
        let truncated = expected_post_cost(&mu, &post);
        assert!(truncated <= exact, "truncation exceeded the limit at n={n}");
        assert!(truncated >= prev, "not monotone at n={n}");
        prev = truncated;
    }
    // 220 steps cover 31 loop iterations: the residual is below 1e-6
    let gap = &exact - &prev;
    assert!(gap < rat(1, 1_000_000), "gap {gap} not below 1e-6");
}

/// Scaling every tick constant by a positive rational scales the expected
/// cost by exactly that factor.
#[test]
fn tick_scaling_scales_expected_cost() {
    fn scale_ticks(e: &Expr, factor: &Rat) -> Expr {
        match e {
            Expr::Tick(inner) => match inner.to_val() {
                Some(Val::Int(n)) => {
                    Expr::Tick(Box::new(Expr::Val(Val::Rat(rat_int(*n) * factor))))
                }
                Some(Val::Rat(r)) => Expr::Tick(Box::new(Expr::Val(Val::Rat(r * factor)))),
                _ => panic!("non-literal tick in fixture"),
            },
            Expr::App(f, a) => Expr::app(scale_ticks(f, factor), scale_ticks(a, factor)),
            Expr::Rec { fname, arg, body } => Expr::Rec {
                fname: fname.clone(),
                arg: arg.clone(),
                body: Box::new(scale_ticks(body, factor)),
            },
            Expr::If(c, t, el) => Expr::If(
                Box::new(scale_ticks(c, factor)),
                Box::new(scale_ticks(t, factor)),
                Box::new(scale_ticks(el, factor)),
            ),
            Expr::BinOp(op, a, b) => Expr::BinOp(
                *op,
                Box::new(scale_ticks(a, factor)),
                Box::new(scale_ticks(b, factor)),
            ),
            Expr::ChooseUniform(a) => Expr::ChooseUniform(Box::new(scale_ticks(a, factor))),
            Expr::ChooseWeighted(a) => Expr::ChooseWeighted(Box::new(scale_ticks(a, factor))),
            other => other.clone(),
        }
    }

    let lambda = rat(3, 2);
    for src in PROGRAMS {
        let (_, _, base) = solved(src);
        let scaled_expr = scale_ticks(&parse_program(src).unwrap(), &lambda);
        let g = explore_graph(&scaled_expr, Some(&Scheduler::Leftmost), ExploreLimits::default())
            .unwrap();
        let costs = solve_expected_cost(&g).unwrap();
        assert_eq!(
            costs[0],
            NodeCost::Expected(&base * &lambda),
            "scaling failed for {src}"
        );
    }
}

/// A scheduled distribution serializes to the documented element/mass
/// shape with exact integer strings.
#[test]
fn distribution_json_shape() {
    let mu = phl::Dist::from_weighted([(rat_int(1), "a"), (rat_int(3), "b")]).unwrap();
    let v = serde_json::to_value(&mu).unwrap();
    assert_eq!(
        v,
        serde_json::json!([
            {"elem": "a", "num": "1", "den": "4"},
            {"elem": "b", "num": "3", "den": "4"},
        ])
    );
}
