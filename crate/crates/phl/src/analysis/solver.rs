//! Exact expected total cost to absorption on a scheduled configuration
//! graph, by rational Gaussian elimination per strongly connected
//! component.
//!
//! The value is defined only for nodes that reach a terminal configuration
//! with probability 1; that holds exactly when no reachable bottom SCC is
//! anything other than a single terminal node. Nodes that can reach a
//! stuck-flagged node are reported separately.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exec::ConfigGraph;
use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeCost {
    /// Exact expected total cost until termination.
    Expected(Rat),
    /// Termination probability is below 1 (some reachable bottom SCC is not
    /// a terminal node).
    Nonterminating,
    /// A stuck configuration is reachable.
    StuckReachable,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("expected-cost solving requires a scheduled graph (at most one action per node)")]
    NotScheduled,
    #[error("singular linear system (internal invariant violated)")]
    SingularSystem,
}

pub fn solve_expected_cost(g: &ConfigGraph) -> Result<Vec<NodeCost>, SolveError> {
    // a demonic graph of a single-threaded program is scheduled in substance
    if g.nodes.iter().any(|n| n.actions.len() > 1) {
        return Err(SolveError::NotScheduled);
    }
    let n = g.nodes.len();

    // successor lists, with edge data (prob, cost, to)
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut edges: Vec<Vec<(Rat, Rat, usize)>> = vec![Vec::new(); n];
    for (id, node) in g.nodes.iter().enumerate() {
        if let Some(a) = node.actions.first() {
            for ((to, cost), p) in a.edges.iter() {
                succ[id].push(*to);
                edges[id].push((p.as_rat().clone(), cost.clone(), *to));
            }
        }
    }

    // nodes that can reach a stuck-flagged node
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, ss) in succ.iter().enumerate() {
        for &t in ss {
            pred[t].push(id);
        }
    }
    let mut stuck_reach = vec![false; n];
    let mut queue: Vec<usize> = (0..n).filter(|&i| g.nodes[i].stuck).collect();
    for &i in &queue {
        stuck_reach[i] = true;
    }
    while let Some(i) = queue.pop() {
        for &p in &pred[i] {
            if !stuck_reach[p] {
                stuck_reach[p] = true;
                queue.push(p);
            }
        }
    }

    // SCCs, emitted successors-first
    let sccs = tarjan_sccs(&succ);
    let mut scc_of = vec![usize::MAX; n];
    for (k, scc) in sccs.iter().enumerate() {
        for &v in scc {
            scc_of[v] = k;
        }
    }
    // a bottom SCC is fine only when it is a single terminal node
    let mut scc_bad = vec![false; sccs.len()];
    for (k, scc) in sccs.iter().enumerate() {
        let mut bottom = true;
        let mut succ_bad = false;
        for &v in scc {
            for &t in &succ[v] {
                if scc_of[t] != k {
                    bottom = false;
                    // successor SCCs are emitted before this one
                    succ_bad |= scc_bad[scc_of[t]];
                }
            }
        }
        let good_bottom = scc.len() == 1 && g.nodes[scc[0]].terminal;
        scc_bad[k] = succ_bad || (bottom && !good_bottom);
    }

    let mut out: Vec<Option<NodeCost>> = vec![None; n];
    let mut solved: Vec<Option<Rat>> = vec![None; n];
    for (k, scc) in sccs.iter().enumerate() {
        if stuck_reach[scc[0]] || scc_bad[k] {
            for &v in scc {
                out[v] = Some(if stuck_reach[v] {
                    NodeCost::StuckReachable
                } else {
                    NodeCost::Nonterminating
                });
            }
            continue;
        }
        // E(v) = sum_j p_j * (c_j + E(t_j)); terminal nodes pin E = 0.
        let size = scc.len();
        let pos = |v: usize| scc.iter().position(|&w| w == v).unwrap();
        let mut matrix: Vec<Vec<Rat>> = vec![vec![Rat::zero(); size + 1]; size];
        for (row, &v) in scc.iter().enumerate() {
            matrix[row][row] = Rat::one();
            if g.nodes[v].terminal {
                continue; // E(v) = 0
            }
            for (p, c, t) in &edges[v] {
                matrix[row][size] += p * c;
                if scc_of[*t] == k {
                    let col = pos(*t);
                    matrix[row][col] -= p;
                } else {
                    let known = solved[*t].as_ref().expect("successor SCC already solved");
                    matrix[row][size] += p * known;
                }
            }
        }
        let solution = gaussian_elimination(matrix).ok_or(SolveError::SingularSystem)?;
        for (row, &v) in scc.iter().enumerate() {
            solved[v] = Some(solution[row].clone());
            out[v] = Some(NodeCost::Expected(solution[row].clone()));
        }
    }
    Ok(out.into_iter().map(|o| o.expect("every node classified")).collect())
}

/// Solves the augmented system in place; `None` on a singular matrix.
fn gaussian_elimination(mut m: Vec<Vec<Rat>>) -> Option<Vec<Rat>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let scale = m[col][col].clone();
        for x in m[col].iter_mut() {
            *x /= &scale;
        }
        for row in 0..n {
            if row != col && !m[row][col].is_zero() {
                let factor = m[row][col].clone();
                for c in col..=n {
                    let delta = &factor * &m[col][c];
                    m[row][c] -= delta;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[row.len() - 1].clone()).collect())
}

/// Iterative Tarjan; SCCs are emitted in reverse topological order of the
/// condensation (every successor SCC before its predecessors).
fn tarjan_sccs(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succ.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut sccs: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0usize;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut frames: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(frame) = frames.last_mut() {
            let (v, ci) = (frame.0, frame.1);
            if ci < succ[v].len() {
                frame.1 += 1;
                let w = succ[v][ci];
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(parent) = frames.last() {
                    let p = parent.0;
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut scc = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        scc.push(w);
                        if w == v {
                            break;
                        }
                    }
                    scc.sort_unstable();
                    sccs.push(scc);
                }
            }
        }
    }
    sccs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{explore_graph, ExploreLimits, Scheduler};
    use crate::rat::{rat, rat_int};
    use crate::syntax::parse_program;

    fn solve(src: &str) -> (ConfigGraph, Vec<NodeCost>) {
        let e = parse_program(src).unwrap();
        let g = explore_graph(&e, Some(&Scheduler::Leftmost), ExploreLimits::default()).unwrap();
        let costs = solve_expected_cost(&g).unwrap();
        (g, costs)
    }

    #[test]
    fn straight_line_cost_is_additive() {
        let (_, costs) = solve("tick 3 ;; tick 4");
        assert_eq!(costs[0], NodeCost::Expected(rat_int(7)));
    }

    #[test]
    fn coin_toss_expected_cost_is_exactly_two() {
        let (_, costs) = solve(
            "(rec toss _ := tick 1 ;; (if ChooseUniform [true, false] = false then toss ())) ()",
        );
        assert_eq!(costs[0], NodeCost::Expected(rat_int(2)));
    }

    #[test]
    fn weighted_retry_loop_matches_geometric_series() {
        // succeed with probability 1/4 per attempt: expected attempts 4
        let (_, costs) = solve(
            "(rec f _ := tick 1 ;; (if ChooseWeighted [(1, true), (3, false)] then () else f ())) ()",
        );
        assert_eq!(costs[0], NodeCost::Expected(rat_int(4)));
    }

    #[test]
    fn diverging_program_is_nonterminating() {
        let (g, costs) = solve("(rec f _ := f ()) ()");
        assert_eq!(costs[0], NodeCost::Nonterminating);
        assert!(g.nodes.iter().all(|n| !n.terminal));
    }

    #[test]
    fn stuck_reachable_is_flagged() {
        let (_, costs) = solve("tick 1 ;; (1 + true)");
        assert_eq!(costs[0], NodeCost::StuckReachable);
    }

    #[test]
    fn mixed_branches_report_per_node() {
        // one branch terminates, the other gets stuck
        let (g, costs) = solve("if ChooseUniform [true, false] then tick 1 else (1 + true)");
        assert_eq!(costs[0], NodeCost::StuckReachable);
        // the terminal node itself has expected cost 0
        let term = g.nodes.iter().position(|n| n.terminal).unwrap();
        assert_eq!(costs[term], NodeCost::Expected(rat_int(0)));
    }

    #[test]
    fn demonic_graphs_are_rejected() {
        let e = parse_program("fork (tick 1) ;; tick 2").unwrap();
        let g = explore_graph(&e, None, ExploreLimits::default()).unwrap();
        assert_eq!(solve_expected_cost(&g), Err(SolveError::NotScheduled));
    }

    #[test]
    fn fractional_probabilities_solve_exactly() {
        // cost 1 then retry with probability 2/3: E = 3
        let (_, costs) = solve(
            "(rec f _ := tick 1 ;; (if ChooseWeighted [(1, true), (2, false)] then () else f ())) ()",
        );
        assert_eq!(costs[0], NodeCost::Expected(rat_int(3)));
        // nested coin flips with rational tick: E = 1/2 * (1/2 + 3/2) = 1
        let (_, costs) = solve("if ChooseUniform [true, false] then tick 0.5 else tick 1.5");
        assert_eq!(costs[0], NodeCost::Expected(rat_int(1)));
        let _ = rat(1, 2);
    }

    #[test]
    fn gaussian_elimination_rejects_singular() {
        let m = vec![
            vec![rat_int(1), rat_int(1), rat_int(1)],
            vec![rat_int(2), rat_int(2), rat_int(2)],
        ];
        assert_eq!(gaussian_elimination(m), None);
    }

    #[test]
    fn tarjan_orders_successors_first() {
        // 0 -> 1 -> 2, 2 -> 1 (cycle {1,2}), 0 -> 3
        let succ = vec![vec![1, 3], vec![2], vec![1], vec![]];
        let sccs = tarjan_sccs(&succ);
        let pos = |v: usize| sccs.iter().position(|s| s.contains(&v)).unwrap();
        assert!(pos(1) < pos(0));
        assert!(pos(3) < pos(0));
        assert_eq!(pos(1), pos(2));
    }
}
