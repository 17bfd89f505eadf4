//! Reference-element machinery: quadrature, the orthonormal spatial basis,
//! the nodal space-time basis and the universal matrices derived from them.

pub mod poly;
pub mod quadrature;
pub mod spacetime;
pub mod spatial;

pub use quadrature::{triangle_rule, LineRule, TriangleRule};
pub use spacetime::{ReferenceElement, SpaceTimeBasis, Table, REF_VERTICES};
pub use spatial::{dof_count, SpatialBasis, MAX_MODES};
