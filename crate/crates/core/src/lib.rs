//! Counting the reachable markings of Petri nets through structural
//! reductions.
//!
//! A net is [reduced](reduce::reduce) to a smaller residual net while every
//! rule application records a linear constraint between the markings of the
//! two nets. [`count::count_markings`] then turns those constraints into a
//! closed-form count, usually a polynomial in the initial marking, and adds
//! up the residual net's contribution found by [explicit
//! exploration](explore).
//!
//! ```
//! use netcount::{count::count_markings, parser::parse_net, reduce::{ReductionLimits, Strategy}};
//!
//! let net = parse_net("pl p (3)\ntr t p -> q").unwrap();
//! let report = count_markings(&net, Strategy::Compact, &ReductionLimits::default(), &Default::default()).unwrap();
//! assert_eq!(report.count.to_string(), "4");
//! ```

pub mod count;
pub mod explore;
pub mod linear;
pub mod net;
pub mod parser;
pub mod reduce;
pub mod verify;

pub use count::{count_markings, CountReport};
pub use explore::{count_reachable, reachability_set, ExploreLimits};
pub use linear::{LinSystem, LinearConstraint};
pub use net::{Marking, Net, NetBuilder, PlaceId, TransId};
pub use parser::{parse_net, read_net};
pub use reduce::{reduce, ReductionLimits, ReductionStep, ReductionTrace, Strategy};
