//! Thread-pool execution: one scheduled step, the n-step distribution via
//! monadic bind, and exhaustive exploration of the canonicalized
//! reachable-configuration graph.

use std::collections::{HashMap, VecDeque};

use num_traits::Zero;
use serde_json::json;
use thiserror::Error;

use crate::dist::Dist;
use crate::rat::{format_rat, Rat};
use crate::semantics::{heap_json, prim_step, Heap};
use crate::syntax::{map_locs_expr, map_locs_val, pretty, pretty_val, visit_locs_expr, Expr, Loc};

/// A machine configuration: thread pool (index 0 is the main thread),
/// heap, and accumulated cost.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Config {
    pub threads: Vec<Expr>,
    pub heap: Heap,
    pub cost: Rat,
}

impl Config {
    pub fn initial(e: Expr) -> Config {
        Config { threads: vec![e], heap: Heap::new(), cost: Rat::zero() }
    }

    pub fn main_value(&self) -> Option<&crate::syntax::Val> {
        self.threads[0].to_val()
    }

    /// All threads have terminated in values.
    pub fn is_terminal(&self) -> bool {
        self.threads.iter().all(Expr::is_val)
    }

    pub fn reducible_threads(&self) -> Vec<usize> {
        (0..self.threads.len())
            .filter(|&i| prim_step(&self.threads[i], &self.heap).is_some())
            .collect()
    }

    /// Some non-value thread has no applicable reduction.
    pub fn has_stuck_thread(&self) -> bool {
        self.stuck_threads().next().is_some()
    }

    pub fn stuck_threads(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.threads.len()).filter(|&i| {
            !self.threads[i].is_val() && prim_step(&self.threads[i], &self.heap).is_none()
        })
    }
}

/// Thread selection policy. All policies are pure functions of the
/// configuration and the number of steps taken so far, and select only
/// reducible threads whenever one exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scheduler {
    /// Lowest-index reducible thread.
    Leftmost,
    /// Rotating cursor: starts at `step mod n` and scans forward.
    RoundRobin,
    /// Follows the given index list cyclically, falling back to the lowest
    /// reducible index when the requested thread cannot step.
    Fixed(Vec<usize>),
}

impl Scheduler {
    /// Thread indices in preference order for the given step; the selected
    /// thread is the first reducible one.
    pub fn preference(&self, c: &Config, step_idx: usize) -> Vec<usize> {
        let n = c.threads.len();
        match self {
            Scheduler::Leftmost => (0..n).collect(),
            Scheduler::RoundRobin => {
                let start = step_idx % n;
                (0..n).map(|k| (start + k) % n).collect()
            }
            Scheduler::Fixed(order) => {
                let mut pref = Vec::with_capacity(n + 1);
                if !order.is_empty() {
                    let want = order[step_idx % order.len()];
                    if want < n {
                        pref.push(want);
                    }
                }
                pref.extend(0..n);
                pref
            }
        }
    }

    pub fn pick(&self, c: &Config, step_idx: usize) -> Option<usize> {
        self.preference(c, step_idx)
            .into_iter()
            .find(|&i| prim_step(&c.threads[i], &c.heap).is_some())
    }
}

impl std::str::FromStr for Scheduler {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "leftmost" => Ok(Scheduler::Leftmost),
            "round-robin" => Ok(Scheduler::RoundRobin),
            other => {
                if let Some(list) = other.strip_prefix("fixed:") {
                    let idx: Result<Vec<usize>, _> =
                        list.split(',').map(|p| p.trim().parse()).collect();
                    return idx
                        .map(Scheduler::Fixed)
                        .map_err(|_| format!("bad thread list in `{other}`"));
                }
                Err(format!("unknown scheduler `{other}`"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("configuration graph exceeds {0} nodes")]
    NodeLimitExceeded(usize),
    #[error("distribution support exceeds {0} configurations")]
    SupportLimitExceeded(usize),
    #[error("expected-cost solving requires a scheduled graph (one action per node)")]
    NotScheduled,
}

/// One thread-pool step of thread `i`: the thread's reduct replaces it,
/// forked threads append to the pool, and the step cost adds to the
/// accumulated cost. `None` when thread `i` is a value or stuck.
pub fn step_thread(c: &Config, i: usize) -> Option<Dist<Config>> {
    assert!(i < c.threads.len(), "thread index out of range");
    let d = prim_step(&c.threads[i], &c.heap)?;
    Some(d.map(|o| {
        let mut threads = c.threads.clone();
        threads[i] = o.reduct.clone();
        threads.extend(o.forks.iter().cloned());
        Config { threads, heap: o.heap.clone(), cost: &c.cost + &o.cost }
    }))
}

/// Steps the first reducible thread in the given preference order.
fn step_preferred(
    c: &Config,
    order: impl IntoIterator<Item = usize>,
) -> Option<(usize, Dist<Config>)> {
    for i in order {
        if let Some(d) = step_thread(c, i) {
            return Some((i, d));
        }
    }
    None
}

/// The distribution over configurations after up to `n` scheduled steps.
/// Configurations with no reducible thread (terminated or stuck) are
/// absorbing.
pub fn step_n(c: &Config, n: usize, s: &Scheduler) -> Dist<Config> {
    step_n_limited(c, n, s, usize::MAX).expect("unlimited")
}

pub fn step_n_limited(
    c: &Config,
    n: usize,
    s: &Scheduler,
    max_support: usize,
) -> Result<Dist<Config>, ExecError> {
    let mut dist = Dist::dirac(c.clone());
    for step_idx in 0..n {
        let mut progressed = false;
        let next = dist.bind(|c| match step_preferred(c, s.preference(c, step_idx)) {
            Some((_, d)) => {
                progressed = true;
                d
            }
            None => Dist::dirac(c.clone()),
        });
        if !progressed {
            break;
        }
        dist = next;
        if dist.len() > max_support {
            return Err(ExecError::SupportLimitExceeded(max_support));
        }
    }
    Ok(dist)
}

/// A per-node enabled action: stepping one thread, with a distribution
/// over (successor node, step cost).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub thread: usize,
    pub edges: Dist<(usize, Rat)>,
}

/// A canonicalized configuration (cost stripped) with its enabled actions.
#[derive(Debug, Clone)]
pub struct Node {
    pub threads: Vec<Expr>,
    pub heap: Heap,
    pub terminal: bool,
    pub stuck: bool,
    pub actions: Vec<Action>,
}

/// The reachable-configuration graph. Node 0 is the initial configuration.
/// In demonic mode every reducible thread contributes an action; with a
/// scheduler each node carries exactly the scheduled thread's action.
#[derive(Debug, Clone)]
pub struct ConfigGraph {
    pub nodes: Vec<Node>,
    pub demonic: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ExploreLimits {
    pub max_nodes: usize,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits { max_nodes: 1_000_000 }
    }
}

/// Canonical form of (threads, heap): allocation bases renamed in first-use
/// order (threads in order, then reachable cells, then leftover garbage in
/// base order), accumulated cost stripped, allocation counter normalized.
pub fn canonicalize(threads: &[Expr], heap: &Heap) -> (Vec<Expr>, Heap) {
    let mut rename: HashMap<u64, u64> = HashMap::new();
    let mut order: Vec<u64> = Vec::new();
    let note = |base: u64, rename: &mut HashMap<u64, u64>, order: &mut Vec<u64>| {
        if !rename.contains_key(&base) {
            rename.insert(base, order.len() as u64);
            order.push(base);
        }
    };
    for t in threads {
        visit_locs_expr(t, &mut |l| note(l.base, &mut rename, &mut order));
    }
    // Chase locations stored in reached cells, in canonical base order.
    let mut scanned = 0;
    while scanned < order.len() {
        let base = order[scanned];
        scanned += 1;
        for (l, v) in heap.iter() {
            if l.base == base {
                crate::syntax::visit_locs_val(v, &mut |l2| note(l2.base, &mut rename, &mut order));
            }
        }
    }
    // Unreachable allocations keep a stable order of their own.
    for (l, _) in heap.iter() {
        note(l.base, &mut rename, &mut order);
    }
    let mut f = |l: Loc| Loc { base: rename[&l.base], offset: l.offset };
    let threads = threads.iter().map(|t| map_locs_expr(t, &mut f)).collect();
    let cells = heap
        .iter()
        .map(|(l, v)| (f(*l), map_locs_val(v, &mut f)))
        .collect();
    (threads, Heap::rebuild(cells, order.len() as u64))
}

/// Breadth-first exploration of the canonical configuration graph rooted at
/// `[e]` with an empty heap. Deterministic: identical input yields
/// identical node numbering.
pub fn explore_graph(
    e: &Expr,
    scheduler: Option<&Scheduler>,
    limits: ExploreLimits,
) -> Result<ConfigGraph, ExecError> {
    let (threads0, heap0) = canonicalize(std::slice::from_ref(e), &Heap::new());
    let mut index: HashMap<(Vec<Expr>, Heap), usize> = HashMap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    let mut intern = |threads: Vec<Expr>,
                      heap: Heap,
                      nodes: &mut Vec<Node>,
                      queue: &mut VecDeque<usize>|
     -> Result<usize, ExecError> {
        let key = (threads, heap);
        if let Some(&id) = index.get(&key) {
            return Ok(id);
        }
        let id = nodes.len();
        if id >= limits.max_nodes {
            return Err(ExecError::NodeLimitExceeded(limits.max_nodes));
        }
        index.insert(key.clone(), id);
        let (threads, heap) = key;
        let cfg = Config { threads, heap, cost: Rat::zero() };
        nodes.push(Node {
            terminal: cfg.is_terminal(),
            stuck: cfg.has_stuck_thread(),
            threads: cfg.threads,
            heap: cfg.heap,
            actions: Vec::new(),
        });
        queue.push_back(id);
        Ok(id)
    };

    intern(threads0, heap0, &mut nodes, &mut queue)?;
    while let Some(id) = queue.pop_front() {
        let cfg = Config {
            threads: nodes[id].threads.clone(),
            heap: nodes[id].heap.clone(),
            cost: Rat::zero(),
        };
        let steps: Vec<(usize, Dist<Config>)> = match scheduler {
            Some(s) => step_preferred(&cfg, s.preference(&cfg, 0)).into_iter().collect(),
            None => cfg
                .reducible_threads()
                .into_iter()
                .map(|t| (t, step_thread(&cfg, t).expect("reducible thread steps")))
                .collect(),
        };
        let mut actions = Vec::new();
        for (t, dist) in steps {
            // Merge outcomes that canonicalize to the same (node, cost).
            let mut pairs: Vec<(Rat, (usize, Rat))> = Vec::new();
            for (out, p) in dist.iter() {
                let (threads, heap) = canonicalize(&out.threads, &out.heap);
                let to = intern(threads, heap, &mut nodes, &mut queue)?;
                pairs.push((p.as_rat().clone(), (to, out.cost.clone())));
            }
            let edges = Dist::from_weighted(pairs).expect("nonempty step distribution");
            actions.push(Action { thread: t, edges });
        }
        nodes[id].actions = actions;
    }
    Ok(ConfigGraph { nodes, demonic: scheduler.is_none() })
}

impl ConfigGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Stable JSON dump; node ids here are the handles certificate files
    /// refer to.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<_> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| {
                json!({
                    "id": id,
                    "threads": n.threads.iter().map(pretty).collect::<Vec<_>>(),
                    "heap": heap_json(&n.heap),
                    "terminal": n.terminal,
                    "stuck": n.stuck,
                    "main_value": n.threads[0].to_val().map(pretty_val),
                })
            })
            .collect();
        let mut actions = Vec::new();
        for (id, n) in self.nodes.iter().enumerate() {
            for a in &n.actions {
                let edges: Vec<_> = a
                    .edges
                    .iter()
                    .map(|((to, cost), p)| {
                        json!({
                            "to": to,
                            "prob": format_rat(p.as_rat()),
                            "cost": format_rat(cost),
                        })
                    })
                    .collect();
                actions.push(json!({ "node": id, "thread": a.thread, "edges": edges }));
            }
        }
        json!({ "demonic": self.demonic, "nodes": nodes, "actions": actions })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};
    use crate::syntax::parse_program;

    fn cfg(src: &str) -> Config {
        Config::initial(parse_program(src).unwrap())
    }

    const COIN_TOSS: &str =
        "(rec toss _ := tick 1 ;; (if ChooseUniform [true, false] = false then toss ())) ()";

    #[test]
    fn scheduler_parsing() {
        assert_eq!("leftmost".parse::<Scheduler>(), Ok(Scheduler::Leftmost));
        assert_eq!("round-robin".parse::<Scheduler>(), Ok(Scheduler::RoundRobin));
        assert_eq!("fixed:0,2,1".parse::<Scheduler>(), Ok(Scheduler::Fixed(vec![0, 2, 1])));
        assert!("fixed:x".parse::<Scheduler>().is_err());
        assert!("unfair".parse::<Scheduler>().is_err());
    }

    #[test]
    fn fork_appends_to_pool() {
        let c = cfg("fork (tick 1)");
        let d = step_thread(&c, 0).unwrap();
        assert_eq!(d.len(), 1);
        let (c2, _) = d.iter().next().unwrap();
        assert_eq!(c2.threads.len(), 2);
        assert_eq!(c2.threads[0], Expr::unit());
        assert_eq!(c2.cost, rat_int(0));
    }

    #[test]
    fn values_do_not_step_in_pool() {
        let c = cfg("5");
        assert!(step_thread(&c, 0).is_none());
        assert!(c.is_terminal());
    }

    #[test]
    fn coin_toss_choice_is_two_point() {
        let mut d = Dist::dirac(cfg(COIN_TOSS));
        // advance to the probabilistic branch
        for _ in 0..6 {
            d = d.bind(|c| step_thread(c, 0).unwrap_or_else(|| Dist::dirac(c.clone())));
        }
        assert_eq!(d.len(), 2);
        for (_, p) in d.iter() {
            assert_eq!(p.as_rat(), &rat(1, 2));
        }
    }

    #[test]
    fn step_n_zero_is_dirac() {
        let c = cfg(COIN_TOSS);
        assert_eq!(step_n(&c, 0, &Scheduler::Leftmost), Dist::dirac(c));
    }

    #[test]
    fn step_n_mass_is_one_and_cost_monotone() {
        let c = cfg(COIN_TOSS);
        let mut prev_expected = rat_int(0);
        for n in 0..20 {
            let d = step_n(&c, n, &Scheduler::Leftmost);
            assert_eq!(d.total_mass(), rat_int(1));
            let e = d.expect(|c| c.cost.clone());
            assert!(e >= prev_expected, "expected cost decreased at n={n}");
            prev_expected = e;
        }
    }

    #[test]
    fn step_n_composes_via_bind() {
        let programs = [
            COIN_TOSS,
            "tick 1 ;; tick 2",
            "let l := alloc 0 in l <- 1 ;; !l",
            "ChooseUniform [1, 2, 3] + 1",
            "fork (tick 1) ;; tick 2",
            "(rec f n := if n = 0 then 0 else f (n - 1)) 2",
            "ChooseWeighted [(1, tick 1), (3, tick 2)]",
            "ChooseUniform [true, false] && ChooseUniform [true, false]",
            "if ChooseUniform [true, false] then tick 0.5 else fork (tick 1)",
            "let p := ChooseUniform [(1, 2), (3, 4)] in fst p + snd p",
            "match inl 3 with inl x => tick x | inr _ => () end",
            "head [tick 1 ;; 2, 3]",
            "let l := AllocN(2, 0) in (l + 1) <- ChooseUniform [7, 8] ;; !(l + 1)",
            "1 + ChooseWeighted [(1, 10), (1, 20), (2, 30)]",
            "(rec f n := if n = 0 then () else (tick 1 ;; f (n - 1))) 3",
            "fork (ChooseUniform [1, 2]) ;; ChooseUniform [3, 4]",
            "free (alloc 5) ;; tick 2",
            "CmpXchg(alloc 0, 0, ChooseUniform [1, 2])",
            "length (tail [1, 2, 3]) * ChooseUniform [2, 5]",
            "if 1 < 2 then ChooseRange 0 3 else 9",
        ];
        assert_eq!(programs.len(), 20);
        for src in programs {
            let c = cfg(src);
            for (a, b) in [(0, 3), (1, 2), (2, 2), (3, 4)] {
                let lhs = step_n(&c, a + b, &Scheduler::Leftmost);
                let rhs = step_n(&c, a, &Scheduler::Leftmost)
                    .bind(|mid| step_n(mid, b, &Scheduler::Leftmost));
                assert_eq!(lhs, rhs, "bind composition failed on {src} at {a}+{b}");
            }
        }
    }

    #[test]
    fn coin_toss_half_mass_terminates_after_one_iteration() {
        let c = cfg(COIN_TOSS);
        let d = step_n(&c, 8, &Scheduler::Leftmost);
        let done: Rat = d
            .iter()
            .filter(|(c, _)| c.is_terminal())
            .map(|(_, p)| p.as_rat().clone())
            .sum();
        assert!(done >= rat(1, 2), "terminated mass {done} < 1/2");
    }

    #[test]
    fn coin_toss_graph_is_small_and_cyclic() {
        let e = parse_program(COIN_TOSS).unwrap();
        let g = explore_graph(&e, Some(&Scheduler::Leftmost), ExploreLimits::default()).unwrap();
        assert!(g.len() <= 12, "coin toss graph has {} nodes", g.len());
        assert_eq!(g.nodes.iter().filter(|n| n.terminal).count(), 1);
        assert!(!g.nodes.iter().any(|n| n.stuck));
    }

    #[test]
    fn straight_line_graph_is_a_chain() {
        let e = parse_program("tick 3 ;; tick 4").unwrap();
        let g = explore_graph(&e, Some(&Scheduler::Leftmost), ExploreLimits::default()).unwrap();
        let terminals = g.nodes.iter().filter(|n| n.terminal).count();
        assert_eq!(terminals, 1);
        for n in &g.nodes {
            assert!(n.actions.len() <= 1);
            for a in &n.actions {
                assert_eq!(a.edges.len(), 1);
            }
        }
    }

    #[test]
    fn unbounded_allocation_exceeds_node_limit() {
        let e = parse_program("(rec f _ := alloc 0 ;; f ()) ()").unwrap();
        let got = explore_graph(&e, Some(&Scheduler::Leftmost), ExploreLimits { max_nodes: 200 });
        assert_eq!(got.unwrap_err(), ExecError::NodeLimitExceeded(200));
    }

    #[test]
    fn freed_then_reallocated_states_coalesce() {
        // allocate/free in a loop: the canonical graph stays finite
        let e = parse_program("(rec f _ := let l := alloc 0 in free l ;; f ()) ()").unwrap();
        let g = explore_graph(&e, Some(&Scheduler::Leftmost), ExploreLimits { max_nodes: 200 })
            .unwrap();
        assert!(g.len() < 30);
    }

    #[test]
    fn exploration_is_deterministic() {
        let e = parse_program(COIN_TOSS).unwrap();
        let a = explore_graph(&e, None, ExploreLimits::default()).unwrap();
        let b = explore_graph(&e, None, ExploreLimits::default()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn schedulers_agree_on_single_threaded_programs() {
        let schedulers = [
            Scheduler::Leftmost,
            Scheduler::RoundRobin,
            Scheduler::Fixed(vec![0, 0, 1]),
        ];
        for src in [COIN_TOSS, "tick 1 ;; tick 2", "ChooseUniform [1, 2] + 3"] {
            let c = cfg(src);
            let base = step_n(&c, 9, &schedulers[0]);
            for s in &schedulers[1..] {
                assert_eq!(step_n(&c, 9, s), base, "scheduler mismatch on {src}");
            }
        }
    }

    #[test]
    fn round_robin_interleaves_forked_threads() {
        let c = cfg("fork (tick 1) ;; tick 2");
        let d = step_n(&c, 12, &Scheduler::RoundRobin);
        // both threads finish: total cost 3 with probability 1
        assert_eq!(d.len(), 1);
        let (end, _) = d.iter().next().unwrap();
        assert!(end.is_terminal());
        assert_eq!(end.cost, rat_int(3));
    }

    #[test]
    fn stuck_configs_absorb_and_keep_mass() {
        let c = cfg("1 + true");
        let d = step_n(&c, 5, &Scheduler::Leftmost);
        assert_eq!(d.len(), 1);
        let (end, _) = d.iter().next().unwrap();
        assert!(end.has_stuck_thread());
        assert_eq!(d.total_mass(), rat_int(1));
    }

    #[test]
    fn graph_edges_respect_dist_invariants() {
        let e = parse_program(COIN_TOSS).unwrap();
        let g = explore_graph(&e, None, ExploreLimits::default()).unwrap();
        for n in &g.nodes {
            for a in &n.actions {
                assert_eq!(a.edges.total_mass(), rat_int(1));
                for ((_, cost), _) in a.edges.iter() {
                    assert!(*cost >= rat_int(0));
                }
            }
            if n.terminal {
                assert!(n.actions.is_empty());
            }
        }
    }
}
