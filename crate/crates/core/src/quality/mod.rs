//! Real-ray and diffraction image quality.
//!
//! Every analysis launches collimated beams (object at infinity) aimed so
//! the central ray crosses the centre of the aperture stop, and works at the
//! primary wavelength unless stated otherwise.

use thiserror::Error;

use crate::glass::GlassError;
use crate::paraxial::ParaxialError;

pub mod aim;
pub mod field;
pub mod image;
pub mod opd;
pub mod psf;
pub mod pupil;
pub mod spot;

pub use field::{field_curves_distortion, field_scan_at, FieldSample, FieldScan};
pub use image::{
    letter_f, simulate_image, simulate_image_with, GrayImage, ImageSettings, SimulatedImage,
    SimulationMode,
};
pub use opd::{opd_fan, rms_wavefront_error, FieldFan, OpdFan};
pub use psf::{
    mtf, polychromatic_mtf, psf_and_strehl, psf_from_pupil, MtfCurve, Orientation, Psf, PupilGrid,
};
pub use pupil::{sample_pupil, PupilPattern, PupilSample};
pub use spot::{spot_diagram, spot_rms, Spot, SpotReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QualityError {
    #[error("no ray of field {field_deg}° reached the image plane")]
    NoUnvignettedRays { field_deg: f64 },
    #[error("could not aim the chief ray of field {field_deg}° through the stop centre")]
    ChiefRayAiming { field_deg: f64 },
    #[error("the chief ray of field {field_deg}° does not reach the image plane")]
    ChiefRayBlocked { field_deg: f64 },
    #[error(
        "pupil grid too coarse: OPD changes by {max_step:.3} waves between neighbouring samples"
    )]
    GridTooCoarse { max_step: f64 },
    #[error("invalid sampling: {0}")]
    BadGrid(String),
    #[error("real-ray analyses need an object at infinity")]
    FiniteConjugate,
    #[error("unreadable image: {0}")]
    UnreadableImage(String),
    #[error(transparent)]
    Paraxial(#[from] ParaxialError),
    #[error(transparent)]
    Glass(#[from] GlassError),
}
