//! Independent oracles shared by the integration and acceptance suites.
//! Everything here is deliberately brute-force and separate from the library
//! implementation paths it cross-checks.

#![allow(dead_code)]

use parapc::{CpdagGraph, Dag, Dataset, Graph, SemModel};

/// Naive per-pair Pearson correlation.
pub fn brute_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..a.len() {
        let xa = a[i] - ma;
        let xb = b[i] - mb;
        num += xa * xb;
        da += xa * xa;
        db += xb * xb;
    }
    num / (da * db).sqrt()
}

/// Solves the k-by-k system `m w = rhs` by Gaussian elimination with partial
/// pivoting (row-major `m`).
fn gauss_solve(mut m: Vec<f64>, mut rhs: Vec<f64>, k: usize) -> Vec<f64> {
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&a, &b| m[a * k + col].abs().total_cmp(&m[b * k + col].abs()))
            .unwrap();
        if pivot != col {
            for j in 0..k {
                m.swap(col * k + j, pivot * k + j);
            }
            rhs.swap(col, pivot);
        }
        let diag = m[col * k + col];
        for row in col + 1..k {
            let factor = m[row * k + col] / diag;
            for j in col..k {
                m[row * k + j] -= factor * m[col * k + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut w = vec![0.0; k];
    for row in (0..k).rev() {
        let mut acc = rhs[row];
        for j in row + 1..k {
            acc -= m[row * k + j] * w[j];
        }
        w[row] = acc / m[row * k + row];
    }
    w
}

/// OLS residuals of `col` regressed on the given columns plus an intercept.
fn ols_residuals(d: &Dataset, col: usize, on: &[usize]) -> Vec<f64> {
    let n = d.n();
    let k = on.len() + 1;
    // design: intercept column then the conditioning columns
    let design_col = |j: usize, i: usize| -> f64 {
        if j == 0 {
            1.0
        } else {
            d.value(i, on[j - 1])
        }
    };
    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for i in 0..n {
        for a in 0..k {
            let xa = design_col(a, i);
            rhs[a] += xa * d.value(i, col);
            for b in 0..k {
                gram[a * k + b] += xa * design_col(b, i);
            }
        }
    }
    let w = gauss_solve(gram, rhs, k);
    (0..n)
        .map(|i| {
            let fitted: f64 = (0..k).map(|a| w[a] * design_col(a, i)).sum();
            d.value(i, col) - fitted
        })
        .collect()
}

/// Residual-regression partial correlation: regress x and y on the
/// conditioning columns and correlate the residuals.
pub fn residual_partial_correlation(d: &Dataset, x: usize, y: usize, cond: &[usize]) -> f64 {
    let rx = ols_residuals(d, x, cond);
    let ry = ols_residuals(d, y, cond);
    brute_pearson(&rx, &ry)
}

/// Explicit path-enumeration d-separation check: walks every simple path
/// between x and y in the DAG's skeleton and tests it against the
/// collider/non-collider activation rules.
pub fn dsep_by_path_enumeration(dag: &Dag, x: usize, y: usize, cond: &[usize]) -> bool {
    let p = dag.node_count();
    let mut in_cond = vec![false; p];
    for &z in cond {
        in_cond[z] = true;
    }
    let mut anc_of_cond = vec![false; p];
    let mut stack: Vec<usize> = cond.to_vec();
    while let Some(v) = stack.pop() {
        if !anc_of_cond[v] {
            anc_of_cond[v] = true;
            stack.extend_from_slice(dag.parents_of(v));
        }
    }
    let has_directed = |a: usize, b: usize| dag.children_of(a).contains(&b);
    let path_is_active = |path: &[usize]| -> bool {
        for w in path.windows(3) {
            let (prev, v, next) = (w[0], w[1], w[2]);
            let collider = has_directed(prev, v) && has_directed(next, v);
            if collider {
                if !anc_of_cond[v] {
                    return false;
                }
            } else if in_cond[v] {
                return false;
            }
        }
        true
    };

    let mut path = vec![x];
    let mut on_path = vec![false; p];
    on_path[x] = true;
    fn dfs(
        dag: &Dag,
        path: &mut Vec<usize>,
        on_path: &mut Vec<bool>,
        y: usize,
        active: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        let last = *path.last().unwrap();
        let mut neighbors: Vec<usize> = dag.parents_of(last).to_vec();
        neighbors.extend_from_slice(dag.children_of(last));
        for w in neighbors {
            if on_path[w] {
                continue;
            }
            path.push(w);
            if w == y {
                if active(path) {
                    path.pop();
                    return true;
                }
            } else {
                on_path[w] = true;
                if dfs(dag, path, on_path, y, active) {
                    on_path[w] = false;
                    path.pop();
                    return true;
                }
                on_path[w] = false;
            }
            path.pop();
        }
        false
    }
    !dfs(dag, &mut path, &mut on_path, y, &path_is_active)
}

/// Every labeled DAG on `p` nodes, enumerated from all three-state pair
/// assignments (absent / forward / backward) filtered to acyclic graphs.
pub fn all_dags(p: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    let total = 3usize.pow(pairs.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(i, j) in &pairs {
            match c % 3 {
                1 => edges.push((i, j)),
                2 => edges.push((j, i)),
                _ => {}
            }
            c /= 3;
        }
        if let Ok(dag) = Dag::new(p, &edges) {
            out.push(dag);
        }
    }
    out
}

/// All subsets of `0..p` excluding `x` and `y`, as sorted vectors.
pub fn conditioning_sets(p: usize, x: usize, y: usize) -> Vec<Vec<usize>> {
    let others: Vec<usize> = (0..p).filter(|&v| v != x && v != y).collect();
    (0..(1usize << others.len()))
        .map(|mask| {
            others
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask >> i & 1 == 1)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}

/// True CPDAG of a DAG by brute force: enumerate every orientation of the
/// skeleton, keep the acyclic ones with the same v-structures, and direct an
/// edge in the CPDAG only when all equivalence-class members agree on it.
pub fn true_cpdag_bruteforce(dag: &Dag) -> CpdagGraph {
    let skeleton = dag.skeleton();
    let edges = skeleton.adjacent_pairs();
    let class = equivalence_class(dag.node_count(), &edges, &dag.v_structures());
    cpdag_from_class(dag.node_count(), &edges, &class)
}

/// All DAG orientations of `edges` (each pair `(a, b)` oriented forward or
/// backward) whose v-structure set equals `v_structures`.
pub fn equivalence_class(
    p: usize,
    edges: &[(usize, usize)],
    v_structures: &[(usize, usize, usize)],
) -> Vec<Dag> {
    let mut class = Vec::new();
    for mask in 0..(1usize << edges.len()) {
        let oriented: Vec<(usize, usize)> = edges
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| if mask >> i & 1 == 0 { (a, b) } else { (b, a) })
            .collect();
        if let Ok(candidate) = Dag::new(p, &oriented) {
            if candidate.v_structures() == v_structures {
                class.push(candidate);
            }
        }
    }
    class
}

fn cpdag_from_class(p: usize, edges: &[(usize, usize)], class: &[Dag]) -> CpdagGraph {
    assert!(
        !class.is_empty(),
        "equivalence class contains the DAG itself"
    );
    let mut cpdag = CpdagGraph::new(p);
    for &(a, b) in edges {
        let forward = class
            .iter()
            .filter(|d| d.children_of(a).contains(&b))
            .count();
        if forward == class.len() {
            cpdag.add_directed(a, b);
        } else if forward == 0 {
            cpdag.add_directed(b, a);
        } else {
            cpdag.add_undirected(a, b);
        }
    }
    cpdag
}

/// All consistent DAG extensions of a CPDAG: its directed edges stay fixed,
/// every orientation of the undirected part that is acyclic and preserves
/// the v-structure set is kept.
pub fn consistent_extensions(cpdag: &CpdagGraph) -> Vec<Dag> {
    let p = cpdag.node_count();
    let fixed = cpdag.directed_edges();
    let free = cpdag.undirected_edges();
    let want = cpdag.v_structures();
    let mut out = Vec::new();
    for mask in 0..(1usize << free.len()) {
        let mut edges = fixed.clone();
        for (i, &(a, b)) in free.iter().enumerate() {
            edges.push(if mask >> i & 1 == 0 { (a, b) } else { (b, a) });
        }
        if let Ok(candidate) = Dag::new(p, &edges) {
            if candidate.v_structures() == want {
                out.push(candidate);
            }
        }
    }
    out
}

/// Closed-form total causal effect in a linear SEM: the sum over all
/// directed paths from x to y of the products of edge weights.
pub fn total_effect_closed_form(model: &SemModel, x: usize, y: usize) -> f64 {
    fn paths_from(model: &SemModel, v: usize, y: usize, memo: &mut [Option<f64>]) -> f64 {
        if v == y {
            return 1.0;
        }
        if let Some(cached) = memo[v] {
            return cached;
        }
        let mut acc = 0.0;
        for &c in model.dag().children_of(v) {
            let w = model.weight(v, c).expect("edge weight");
            acc += w * paths_from(model, c, y, memo);
        }
        memo[v] = Some(acc);
        acc
    }
    let mut memo = vec![None; model.dag().node_count()];
    paths_from(model, x, y, &mut memo)
}

/// Maps learned edges in permuted-column space back to original labels.
pub fn relabel_edges(edges: &[(usize, usize)], perm: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = edges
        .iter()
        .map(|&(a, b)| {
            let (oa, ob) = (perm[a], perm[b]);
            if oa < ob {
                (oa, ob)
            } else {
                (ob, oa)
            }
        })
        .collect();
    out.sort_unstable();
    out
}

/// Convenience: sorted canonical edge list of a graph.
pub fn edge_list(graph: &Graph) -> Vec<(usize, usize)> {
    graph.adjacent_pairs()
}
