//! Locally homogeneous structures on compact complex curves and their lifts
//! to flat ℙ¹-bundles over elliptic curves.

pub mod curves;
pub mod error;
pub mod lattice;
pub mod lifts;
pub mod moebius;
pub mod numerics;
pub mod subgroup;

pub use error::{Error, Result};
pub use lattice::{Lattice, MultGroup};
pub use moebius::{Moebius, SpherePoint};
pub use numerics::{Scalar, Tolerance};
pub use subgroup::{SubgroupClass, SubgroupTag};
