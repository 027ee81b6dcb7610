//! Nodal sets and nodal domains of sampled fields.
//!
//! Zero sets are extracted by marching squares on the node lattice (periodic
//! in the base, and in the fibre on the torus). Segment endpoints are keyed by
//! the cell edge they sit on, so connectivity is exact integer bookkeeping and
//! survives the periodic seams.

mod checks;
mod contour;
mod distance;
mod domains;
mod field;
mod union_find;

pub use checks::{boundary_trace_components, graph_over_fiber_check, zeros_of_base, BaseZero, NodalReport};
pub use contour::{extract_nodal_set, NodalSegment, NodalSet, Point};
pub use distance::{hausdorff_distance, CurveSet};
pub use domains::count_nodal_domains;
pub use field::{BaseField, FieldDomain, ScalarField};
pub use union_find::UnionFind;
