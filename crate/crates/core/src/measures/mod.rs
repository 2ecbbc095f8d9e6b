//! Finitely supported measures, resolution-indexed families, finite set
//! algebras and charge tables.

mod algebra;
mod charge;
mod discrete;
mod located;

pub use algebra::{Member, SetAlgebra, MAX_ATOMS};
pub use charge::{
    ca_failure_witness, charge_from_limits, member_series, ChargeTable, FnRealizer, Interval,
    IntervalCells, MemberStatus, SetRealizer, WitnessReport,
};
pub use discrete::{DiscreteMeasure, TOL_MASS};
pub use located::{
    common_space, Coord, Family, FamilySpec, FnFamily, LocExpr, LocatedMeasure, MeasureFamily,
};
