use super::field::ScalarField;
use super::union_find::UnionFind;
use crate::geometry::FibreBoundary;

/// Connected components of strictly positive and strictly negative nodes
/// under 4-neighbour adjacency. Exact zeros belong to no domain.
pub fn count_nodal_domains(f: &ScalarField) -> usize {
    let d = &f.domain;
    let (n_s, n_fib) = (d.n_s, d.n_fibre());
    let wrap_fibre = d.boundary == FibreBoundary::Periodic;
    let idx = |i: usize, j: usize| i * n_fib + j;
    let sign = |v: f64| {
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };

    let mut uf = UnionFind::new(n_s * n_fib);
    for i in 0..n_s {
        for j in 0..n_fib {
            let s = sign(f.at(i, j));
            if s == 0 {
                continue;
            }
            let right = (i + 1) % n_s;
            if sign(f.at(right, j)) == s {
                uf.union(idx(i, j), idx(right, j));
            }
            if j + 1 < n_fib || wrap_fibre {
                let up = (j + 1) % n_fib;
                if sign(f.at(i, up)) == s {
                    uf.union(idx(i, j), idx(i, up));
                }
            }
        }
    }
    let mut roots: Vec<usize> = (0..n_s * n_fib)
        .filter(|&k| f.values[k] != 0.0)
        .map(|k| uf.find(k))
        .collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}
