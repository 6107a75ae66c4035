//! Exact simulation of a planar Poisson line process coupled with a
//! high-intensity Boolean disc model.
//!
//! Both models are driven by one marked Poisson process of atoms
//! `(rho, theta, R)`: every atom yields a polar line (the Crofton cell side)
//! and a disc whose near boundary shadows that line after rescaling by
//! `lambda^2`. On top of the coupling the crate provides
//!
//! * [`geometry`]: polar lines, discs, ray hits, convex cells, Hausdorff distance;
//! * [`coupling`]: mark laws, seeded atom streams, certified windowed realizations;
//! * [`vacancy`]: Crofton cell with per-edge marks, defect traces and gap metrics;
//! * [`laws`]: closed-form densities, tail bounds and quadrature oracles;
//! * [`quad`]: adaptive Gauss–Kronrod integration used by the oracles;
//! * [`sum`]: exactly rounded, order-independent summation.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// negated comparisons deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod coupling;
pub mod geometry;
pub mod laws;
pub mod quad;
pub mod sum;
pub mod vacancy;

pub use coupling::{MarkKind, MarkLaw, MarkedPoint, Realization, RunConfig};
pub use geometry::{ConvexPolygon, Disc, Point, PolarLine};
pub use vacancy::{CroftonCell, DefectTrace, RadiiSummary};
