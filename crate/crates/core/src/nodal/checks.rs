use std::collections::BTreeMap;

use serde::Serialize;

use super::contour::NodalSet;
use super::field::{wrap, BaseField};
use crate::error::{Error, Result};

/// A simple zero of a base function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BaseZero {
    pub s: f64,
    pub slope: f64,
}

/// Clusters of nodal endpoints on the Dirichlet walls; crossings closer than
/// one base cell along a wall belong to the same cluster. Zero without walls.
pub fn boundary_trace_components(n: &NodalSet) -> usize {
    let d = &n.domain;
    let mut total = 0;
    for wall in [false, true] {
        let mut s: Vec<f64> = n
            .wall_crossings()
            .into_iter()
            .filter(|&(w, _)| w == wall)
            .map(|(_, s)| s)
            .collect();
        if s.is_empty() {
            continue;
        }
        s.sort_by(f64::total_cmp);
        let reach = d.h_s * (1.0 + 1e-9);
        let mut clusters = 1 + s.windows(2).filter(|w| w[1] - w[0] > reach).count();
        let seam_gap = s[0] + d.period - s[s.len() - 1];
        if clusters > 1 && seam_gap <= reach {
            clusters -= 1;
        }
        total += clusters;
    }
    total
}

/// Zeros of a periodic sampled function by linear interpolation between sign
/// changes, with slopes from differences across each zero.
pub fn zeros_of_base(psi: &BaseField) -> Result<Vec<BaseZero>> {
    let n = psi.values.len();
    if n < 3 {
        return Err(Error::InsufficientPoints(n));
    }
    let v = &psi.values;
    let h = psi.spacing();
    if v.iter().all(|x| *x == 0.0) {
        return Err(Error::DegenerateField { zeros: n, total: n });
    }
    let max_slope = (0..n)
        .map(|i| (v[(i + 1) % n] - v[(i + n - 1) % n]).abs() / (2.0 * h))
        .fold(0.0, f64::max);

    let mut zeros = Vec::new();
    for i in 0..n {
        let (prev, a, b) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
        let s_i = psi.s0 + i as f64 * h;
        let zero = if a == 0.0 {
            let slope = (b - prev) / (2.0 * h);
            if prev * b >= 0.0 {
                return Err(Error::NonTransversalZero { s: s_i, slope });
            }
            Some(BaseZero { s: s_i, slope })
        } else if a * b < 0.0 {
            let t = a / (a - b);
            Some(BaseZero {
                s: s_i + t * h,
                slope: (b - a) / h,
            })
        } else {
            None
        };
        if let Some(mut z) = zero {
            if z.slope.abs() < 1e-6 * max_slope {
                return Err(Error::NonTransversalZero { s: z.s, slope: z.slope });
            }
            z.s = z.s.rem_euclid(psi.period);
            zeros.push(z);
        }
    }
    zeros.sort_by(|a, b| a.s.total_cmp(&b.s));
    Ok(zeros)
}

/// Graph-over-fibre test: (a) the nodal set lies in the union of base tubes
/// of the given radius around the zeros, (b) inside each tube every fibre
/// row is crossed exactly once, (c) one component per zero.
pub fn graph_over_fiber_check(n: &NodalSet, zeros: &[f64], tube_radius: f64) -> bool {
    if n.component_count != zeros.len() {
        return false;
    }
    let period = n.domain.period;
    let near = |s: f64| zeros.iter().position(|z| wrap(s - z, period).abs() <= tube_radius);
    let inside = n
        .segments
        .iter()
        .all(|seg| near(seg.a.0).is_some() && near(seg.b.0).is_some());
    if !inside {
        return false;
    }
    let mut per_row: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (row, s) in n.row_crossings() {
        if let Some(z) = near(s) {
            *per_row.entry((z, row)).or_default() += 1;
        }
    }
    let rows = n.lattice_rows();
    (0..zeros.len()).all(|z| (0..rows).all(|r| per_row.get(&(z, r)) == Some(&1)))
}

/// Nodal measurements of one computed eigenfunction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodalReport {
    pub domain_count: usize,
    pub component_count: usize,
    pub hausdorff: f64,
    pub boundary_components: usize,
    pub graph_over_fiber: bool,
    pub zero_list: Vec<f64>,
}
