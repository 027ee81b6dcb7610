use std::collections::HashMap;
use std::io::Write;

use super::field::{wrap, FieldDomain, ScalarField};
use super::union_find::UnionFind;
use crate::error::{Error, Result};
use crate::geometry::FibreBoundary;

pub type Point = (f64, f64);

/// One marching-squares segment. `edges` are the ids of the two cell edges
/// carrying its endpoints; shared ids define adjacency.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalSegment {
    pub a: Point,
    pub b: Point,
    pub edges: [usize; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodalSet {
    pub domain: FieldDomain,
    pub segments: Vec<NodalSegment>,
    pub component_labels: Vec<usize>,
    pub component_count: usize,
}

/// Vertex lattice of a field. Dirichlet fibres gain wall rows that copy the
/// adjacent interior row, so nodal lines run up to the walls.
pub(crate) struct Lattice<'a> {
    field: &'a ScalarField,
    pub rows: usize,
    pub wrap_rows: bool,
}

impl<'a> Lattice<'a> {
    pub fn new(field: &'a ScalarField) -> Self {
        let d = &field.domain;
        match d.boundary {
            FibreBoundary::Periodic => Self {
                field,
                rows: d.n_f,
                wrap_rows: true,
            },
            FibreBoundary::Dirichlet => Self {
                field,
                rows: d.n_f + 1,
                wrap_rows: false,
            },
        }
    }

    pub fn value(&self, i: usize, r: usize) -> f64 {
        let j = if self.wrap_rows {
            r
        } else {
            r.saturating_sub(1).min(self.field.domain.n_fibre() - 1)
        };
        self.field.at(i % self.field.domain.n_s, j)
    }

    pub fn row_coord(&self, r: usize) -> f64 {
        self.field.domain.fibre_lo + r as f64 * self.field.domain.h_f
    }

    fn cell_rows(&self) -> usize {
        if self.wrap_rows {
            self.rows
        } else {
            self.rows - 1
        }
    }
}

pub(crate) fn horizontal_edge(rows: usize, i: usize, r: usize) -> usize {
    2 * (i * rows + r)
}

fn vertical_edge(rows: usize, i: usize, r: usize) -> usize {
    2 * (i * rows + r) + 1
}

/// `(is_horizontal, column, row)` of an edge id.
pub(crate) fn decode_edge(rows: usize, id: usize) -> (bool, usize, usize) {
    let cell = id / 2;
    (id.is_multiple_of(2), cell / rows, cell % rows)
}

fn positive(v: f64) -> bool {
    v >= 0.0
}

impl NodalSet {
    pub(crate) fn lattice_rows(&self) -> usize {
        match self.domain.boundary {
            FibreBoundary::Periodic => self.domain.n_f,
            FibreBoundary::Dirichlet => self.domain.n_f + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Distinct edge crossings: `(edge id, canonical point)`.
    pub fn crossings(&self) -> Vec<(usize, Point)> {
        let mut seen = HashMap::new();
        for seg in &self.segments {
            for (id, p) in seg.edges.iter().zip([seg.a, seg.b]) {
                let d = &self.domain;
                let f = match d.fibre_period() {
                    Some(per) => d.fibre_lo + (p.1 - d.fibre_lo).rem_euclid(per),
                    None => p.1,
                };
                seen.entry(*id).or_insert((d.s0 + (p.0 - d.s0).rem_euclid(d.period), f));
            }
        }
        let mut out: Vec<_> = seen.into_iter().collect();
        out.sort_by_key(|&(id, _)| id);
        out
    }

    /// Crossings on fibre row `r` of the vertex lattice (horizontal edges).
    pub(crate) fn row_crossings(&self) -> Vec<(usize, f64)> {
        let rows = self.lattice_rows();
        self.crossings()
            .into_iter()
            .filter_map(|(id, p)| {
                let (horizontal, _, r) = decode_edge(rows, id);
                horizontal.then_some((r, p.0))
            })
            .collect()
    }

    /// Crossings on the walls `fibre = lo` (`false`) and `fibre = hi` (`true`).
    pub(crate) fn wall_crossings(&self) -> Vec<(bool, f64)> {
        if self.domain.boundary != FibreBoundary::Dirichlet {
            return Vec::new();
        }
        let rows = self.lattice_rows();
        self.row_crossings()
            .into_iter()
            .filter(|&(r, _)| r == 0 || r == rows - 1)
            .map(|(r, s)| (r != 0, s))
            .collect()
    }

    /// `s0,f0,s1,f1,component` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s0,f0,s1,f1,component")?;
        for (seg, label) in self.segments.iter().zip(&self.component_labels) {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{label}",
                seg.a.0, seg.a.1, seg.b.0, seg.b.1
            )?;
        }
        Ok(())
    }
}

/// Zero-level polylines by marching squares with periodic wrap.
pub fn extract_nodal_set(f: &ScalarField) -> Result<NodalSet> {
    let zeros = f.values.iter().filter(|v| **v == 0.0).count();
    if zeros * 100 > f.values.len() {
        return Err(Error::DegenerateField {
            zeros,
            total: f.values.len(),
        });
    }
    let d = &f.domain;
    let lat = Lattice::new(f);
    let rows = lat.rows;
    let n_s = d.n_s;

    let crossing = |horizontal: bool, i: usize, r: usize| -> Point {
        let (i1, r1) = if horizontal {
            ((i + 1) % n_s, r)
        } else {
            (i, (r + 1) % rows)
        };
        let va = lat.value(i, r);
        let vb = lat.value(i1, r1);
        let t = va / (va - vb);
        if horizontal {
            (d.s_node(i) + t * d.h_s, lat.row_coord(r))
        } else {
            (d.s_node(i), lat.row_coord(r) + t * d.h_f)
        }
    };

    let mut segments = Vec::new();
    for i in 0..n_s {
        let i1 = (i + 1) % n_s;
        for r in 0..lat.cell_rows() {
            let r1 = (r + 1) % rows;
            let v00 = lat.value(i, r);
            let v10 = lat.value(i1, r);
            let v11 = lat.value(i1, r1);
            let v01 = lat.value(i, r1);
            // bottom, right, top, left
            let edges = [
                (
                    horizontal_edge(rows, i, r),
                    positive(v00) != positive(v10),
                    (true, i, r),
                ),
                (
                    vertical_edge(rows, i1, r),
                    positive(v10) != positive(v11),
                    (false, i1, r),
                ),
                (
                    horizontal_edge(rows, i, r1),
                    positive(v01) != positive(v11),
                    (true, i, r1),
                ),
                (vertical_edge(rows, i, r), positive(v00) != positive(v01), (false, i, r)),
            ];
            let cut: Vec<usize> = (0..4).filter(|&e| edges[e].1).collect();
            let pairs: Vec<(usize, usize)> = match cut.len() {
                0 => Vec::new(),
                2 => vec![(cut[0], cut[1])],
                4 => {
                    let centre = 0.25 * (v00 + v10 + v11 + v01);
                    if positive(centre) == positive(v00) {
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(0, 3), (1, 2)]
                    }
                }
                _ => unreachable!("a cell has an even number of sign changes"),
            };
            for (ea, eb) in pairs {
                let (h, ci, cr) = edges[ea].2;
                let a = crossing(h, ci, cr);
                let (h, ci, cr) = edges[eb].2;
                let mut b = crossing(h, ci, cr);
                // keep the segment inside its cell across the seams
                b.0 = a.0 + wrap(b.0 - a.0, d.period);
                if let Some(p) = d.fibre_period() {
                    b.1 = a.1 + wrap(b.1 - a.1, p);
                }
                segments.push(NodalSegment {
                    a,
                    b,
                    edges: [edges[ea].0, edges[eb].0],
                });
            }
        }
    }

    let mut uf = UnionFind::new(2 * n_s * rows);
    for seg in &segments {
        uf.union(seg.edges[0], seg.edges[1]);
    }
    let mut relabel = HashMap::new();
    let component_labels: Vec<usize> = segments
        .iter()
        .map(|seg| {
            let root = uf.find(seg.edges[0]);
            let next = relabel.len();
            *relabel.entry(root).or_insert(next)
        })
        .collect();

    Ok(NodalSet {
        domain: d.clone(),
        component_count: relabel.len(),
        segments,
        component_labels,
    })
}
