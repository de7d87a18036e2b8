//! CPDAG orientation: v-structure detection from separating sets, then the
//! four Meek closure rules applied to fixpoint.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{CpdagGraph, Graph, SepsetStore};

#[derive(Error, Debug)]
pub enum OrientError {
    #[error("separating set recorded for pair {x}-{y}, but the edge is still present")]
    SepsetForEdge { x: usize, y: usize },
}

/// Orients every unshielded triple x - z - y as the collider x -> z <- y
/// when z is absent from the separating set of (x, y). Conflicting claims on
/// one edge cancel out: the edge stays undirected and a warning is logged.
pub fn orient_colliders(
    skeleton: &Graph,
    sepsets: &SepsetStore,
) -> Result<CpdagGraph, OrientError> {
    for ((x, y), _) in sepsets.iter() {
        if skeleton.has_edge(x, y) {
            return Err(OrientError::SepsetForEdge { x, y });
        }
    }
    let p = skeleton.node_count();
    // (tail, head) claims, keyed by undirected pair for conflict detection.
    let mut claims: BTreeMap<(usize, usize), [bool; 2]> = BTreeMap::new();
    let mut claim = |tail: usize, head: usize| {
        let (lo, hi) = if tail < head {
            (tail, head)
        } else {
            (head, tail)
        };
        let entry = claims.entry((lo, hi)).or_insert([false; 2]);
        entry[usize::from(tail != lo)] = true;
    };
    for z in 0..p {
        let neighbors = skeleton.neighbors(z);
        for (i, &x) in neighbors.iter().enumerate() {
            for &y in &neighbors[i + 1..] {
                if skeleton.has_edge(x, y) {
                    continue;
                }
                let Some(sepset) = sepsets.get(x, y) else {
                    continue;
                };
                if !sepset.contains(&z) {
                    claim(x, z);
                    claim(y, z);
                }
            }
        }
    }
    let mut graph = CpdagGraph::from_skeleton(skeleton);
    for ((lo, hi), directions) in claims {
        match directions {
            [true, false] => graph.orient(lo, hi),
            [false, true] => graph.orient(hi, lo),
            [true, true] => {
                log::warn!(
                    "conflicting collider orientations for edge {lo}-{hi}; leaving it undirected"
                );
            }
            [false, false] => unreachable!("claim entries always set a direction"),
        }
    }
    Ok(graph)
}

/// Applies Meek's rules R1-R4 in fixed order, sweeping until no rule fires.
/// Only existing undirected edges are oriented, so the skeleton is
/// preserved; under consistent inputs no directed cycle or new v-structure
/// can arise.
pub fn meek_closure(mut graph: CpdagGraph) -> CpdagGraph {
    loop {
        let mut changed = false;
        changed |= rule1(&mut graph);
        changed |= rule2(&mut graph);
        changed |= rule3(&mut graph);
        changed |= rule4(&mut graph);
        if !changed {
            break;
        }
    }
    graph
}

/// Convenience pipeline: colliders then Meek closure.
pub fn orient_cpdag(skeleton: &Graph, sepsets: &SepsetStore) -> Result<CpdagGraph, OrientError> {
    Ok(meek_closure(orient_colliders(skeleton, sepsets)?))
}

/// R1: a -> b and b - c with a, c non-adjacent orients b -> c.
fn rule1(g: &mut CpdagGraph) -> bool {
    let p = g.node_count();
    let mut changed = false;
    for b in 0..p {
        for c in g.undirected_neighbors_of(b) {
            let fires = g
                .parents_of(b)
                .into_iter()
                .any(|a| a != c && !g.is_adjacent(a, c));
            if fires {
                g.orient(b, c);
                changed = true;
            }
        }
    }
    changed
}

/// R2: a -> b -> c and a - c orients a -> c.
fn rule2(g: &mut CpdagGraph) -> bool {
    let p = g.node_count();
    let mut changed = false;
    for a in 0..p {
        for c in g.undirected_neighbors_of(a) {
            let fires = g.children_of(a).into_iter().any(|b| g.has_directed(b, c));
            if fires {
                g.orient(a, c);
                changed = true;
            }
        }
    }
    changed
}

/// R3: a - b, a - c, a - d with c -> b, d -> b and c, d non-adjacent orients
/// a -> b.
fn rule3(g: &mut CpdagGraph) -> bool {
    let p = g.node_count();
    let mut changed = false;
    for a in 0..p {
        for b in g.undirected_neighbors_of(a) {
            // neighbours of a (undirected) that already point at b
            let spokes: Vec<usize> = g
                .undirected_neighbors_of(a)
                .into_iter()
                .filter(|&v| v != b && g.has_directed(v, b))
                .collect();
            let fires = spokes
                .iter()
                .enumerate()
                .any(|(i, &c)| spokes[i + 1..].iter().any(|&d| !g.is_adjacent(c, d)));
            if fires {
                g.orient(a, b);
                changed = true;
            }
        }
    }
    changed
}

/// R4: a - b, a - c with c -> d, d -> b, c, b non-adjacent and d adjacent to
/// a orients a -> b.
fn rule4(g: &mut CpdagGraph) -> bool {
    let p = g.node_count();
    let mut changed = false;
    for a in 0..p {
        for b in g.undirected_neighbors_of(a) {
            let fires = g.undirected_neighbors_of(a).into_iter().any(|c| {
                c != b
                    && !g.is_adjacent(c, b)
                    && g.children_of(c)
                        .into_iter()
                        .any(|d| g.has_directed(d, b) && g.is_adjacent(a, d))
            });
            if fires {
                g.orient(a, b);
                changed = true;
            }
        }
    }
    changed
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skeleton(p: usize, edges: &[(usize, usize)]) -> Graph {
        let mut g = Graph::empty(p);
        for &(x, y) in edges {
            g.add_edge(x, y);
        }
        g
    }

    #[test]
    fn collider_oriented_when_center_not_in_sepset() {
        // skeleton a - c, b - c with sepset(a, b) = {} -> a -> c <- b
        let skel = skeleton(3, &[(0, 2), (1, 2)]);
        let mut seps = SepsetStore::new();
        seps.insert(0, 1, vec![]);
        let g = orient_colliders(&skel, &seps).unwrap();
        assert!(g.has_directed(0, 2));
        assert!(g.has_directed(1, 2));
        assert!(g.undirected_edges().is_empty());
    }

    #[test]
    fn center_in_sepset_stays_undirected() {
        // skeleton a - b, b - c with sepset(a, c) = {b} -> nothing oriented
        let skel = skeleton(3, &[(0, 1), (1, 2)]);
        let mut seps = SepsetStore::new();
        seps.insert(0, 2, vec![1]);
        let g = orient_colliders(&skel, &seps).unwrap();
        assert!(g.directed_edges().is_empty());
        assert_eq!(g.undirected_edges(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn sepset_for_existing_edge_is_an_error() {
        let skel = skeleton(3, &[(0, 1)]);
        let mut seps = SepsetStore::new();
        seps.insert(0, 1, vec![2]);
        assert!(matches!(
            orient_colliders(&skel, &seps),
            Err(OrientError::SepsetForEdge { x: 0, y: 1 })
        ));
    }

    #[test]
    fn conflicting_claims_leave_edge_undirected() {
        // triples 2-0-1 and 0-1-3 both unshielded; empty sepsets make them
        // claim 0 -> 1 and 1 -> 0 at once.
        let skel = skeleton(4, &[(2, 0), (0, 1), (1, 3)]);
        let mut seps = SepsetStore::new();
        seps.insert(2, 1, vec![]);
        seps.insert(0, 3, vec![]);
        seps.insert(2, 3, vec![]);
        let g = orient_colliders(&skel, &seps).unwrap();
        assert!(g.is_undirected(0, 1));
        assert!(g.has_directed(2, 0));
        assert!(g.has_directed(3, 1));
    }

    #[test]
    fn meek_rule1() {
        let mut g = CpdagGraph::new(3);
        g.add_directed(0, 1);
        g.add_undirected(1, 2);
        let g = meek_closure(g);
        assert!(g.has_directed(1, 2));
    }

    #[test]
    fn meek_rule2() {
        let mut g = CpdagGraph::new(3);
        g.add_directed(0, 1);
        g.add_directed(1, 2);
        g.add_undirected(0, 2);
        let g = meek_closure(g);
        assert!(g.has_directed(0, 2));
    }

    #[test]
    fn meek_rule3() {
        // a - b, a - c, a - d, c -> b, d -> b, c and d non-adjacent
        let (a, b, c, d) = (0, 1, 2, 3);
        let mut g = CpdagGraph::new(4);
        g.add_undirected(a, b);
        g.add_undirected(a, c);
        g.add_undirected(a, d);
        g.add_directed(c, b);
        g.add_directed(d, b);
        let g = meek_closure(g);
        assert!(g.has_directed(a, b));
    }

    #[test]
    fn meek_rule4() {
        // a - b, a - c, c -> d, d -> b, c and b non-adjacent, a and d adjacent
        let (a, b, c, d) = (0, 1, 2, 3);
        let mut g = CpdagGraph::new(4);
        g.add_undirected(a, b);
        g.add_undirected(a, c);
        g.add_undirected(a, d);
        g.add_directed(c, d);
        g.add_directed(d, b);
        let g = meek_closure(g);
        assert!(g.has_directed(a, b));
    }

    #[test]
    fn closure_is_idempotent_on_examples() {
        let mut g = CpdagGraph::new(4);
        g.add_directed(0, 1);
        g.add_undirected(1, 2);
        g.add_undirected(2, 3);
        let once = meek_closure(g);
        let twice = meek_closure(once.clone());
        assert_eq!(once, twice);
    }
}
