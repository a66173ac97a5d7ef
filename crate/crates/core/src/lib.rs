//! Sequential optical ray tracing, image-quality analysis and lens optimization.
//!
//! The crate is organised bottom-up:
//!
//! * [`trace`] exact ray propagation through refracting surfaces,
//! * [`glass`] dispersion models and glass catalogs,
//! * [`system`] the lens prescription every analysis reads,
//! * [`paraxial`] first-order (y-nu) properties,
//! * [`aberration`] per-surface Seidel coefficients,
//! * [`quality`] spot diagrams, field curves, OPD fans, PSF/MTF and image simulation,
//! * [`optimizer`] merit functions, damped least squares and glass substitution,
//! * [`io`] lens/merit/catalog files and CSV, SVG and PGM emitters.
//!
//! Lengths are millimetres, wavelengths micrometres and field angles degrees
//! at every public interface.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aberration;
pub mod glass;
pub mod io;
pub mod numfmt;
pub mod optimizer;
pub mod paraxial;
pub mod quality;
pub mod system;
pub mod trace;

pub use glass::{GlassCatalog, Material};
pub use system::{LensSystem, Profile, SurfaceNode};
pub use trace::{Ray, TraceResult, TraceStatus};

/// Shipped reference relay prescription.
pub const REFERENCE_RELAY_LENS: &str = include_str!("../data/reference_relay.lens");
/// Merit definition the reference relay was optimized against.
pub const REFERENCE_RELAY_MERIT: &str = include_str!("../data/reference_relay.merit");
/// Variables (with bounds) the reference relay was optimized over.
pub const REFERENCE_RELAY_VARIABLES: &str = include_str!("../data/reference_relay.vars");
