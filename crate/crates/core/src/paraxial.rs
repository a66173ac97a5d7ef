//! First-order (y-nu) optics: focal length, track, pupils and the
//! image-plane solve.

use thiserror::Error;

use crate::glass::GlassError;
use crate::system::LensSystem;

/// Below this image-space slope (per unit input height) a system is afocal.
const AFOCAL_SLOPE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParaxialError {
    #[error("system has no net optical power")]
    AfocalSystem,
    #[error("the aperture stop is conjugate to the object; chief ray undefined")]
    StopAtFocus,
    #[error("the object coincides with the entrance pupil")]
    ObjectAtPupil,
    #[error(transparent)]
    Glass(#[from] GlassError),
}

/// Paraxial ray data at one surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParaxialStep {
    /// Height at the surface.
    pub y: f64,
    /// Index and slope before refraction.
    pub n: f64,
    pub u: f64,
    /// Index and slope after refraction.
    pub n_after: f64,
    pub u_after: f64,
}

/// One paraxial ray traced through the whole system, one step per surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    pub steps: Vec<ParaxialStep>,
}

impl Ladder {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The step at the last surface before the image plane.
    pub fn last_optical(&self) -> &ParaxialStep {
        &self.steps[self.steps.len() - 2]
    }

    pub fn at_image(&self) -> &ParaxialStep {
        &self.steps[self.steps.len() - 1]
    }
}

/// Traces a paraxial ray entering the first surface at height `y0` with slope
/// `u0`: refraction `n'u' = nu − y c (n' − n)`, transfer `y' = y + u' t`.
pub fn paraxial_trace(
    system: &LensSystem,
    y0: f64,
    u0: f64,
    wavelength: f64,
) -> Result<Ladder, GlassError> {
    let indices = system.indices(wavelength)?;
    Ok(trace_with_indices(system, &indices, y0, u0))
}

fn trace_with_indices(system: &LensSystem, indices: &[f64], y0: f64, u0: f64) -> Ladder {
    let mut y = y0;
    let mut u = u0;
    let mut steps = Vec::with_capacity(system.len());
    for (i, s) in system.surfaces().iter().enumerate() {
        let n = indices[i];
        let n_after = indices[i + 1];
        let c = s.profile.curvature();
        let nu_after = n * u - y * c * (n_after - n);
        let u_after = nu_after / n_after;
        steps.push(ParaxialStep {
            y,
            n,
            u,
            n_after,
            u_after,
        });
        y += u_after * s.thickness;
        u = u_after;
    }
    Ladder { steps }
}

/// Entrance pupil location (mm from the first vertex, +z positive) found by
/// imaging the stop into object space.
pub fn entrance_pupil_position(system: &LensSystem, wavelength: f64) -> Result<f64, ParaxialError> {
    let indices = system.indices(wavelength)?;
    let stop = system.stop_index();
    let ya = trace_with_indices(system, &indices, 1.0, 0.0).steps[stop].y;
    let yb = trace_with_indices(system, &indices, 0.0, 1.0).steps[stop].y;
    if ya.abs() < 1e-300 {
        return Err(ParaxialError::StopAtFocus);
    }
    // chief ray: y0 = -u0 * yb / ya crosses the axis at z = -y0/u0
    Ok(yb / ya)
}

/// Marginal ray: from infinity at EPD/2, or from the axial object point to
/// the rim of the entrance pupil.
pub fn marginal_ray(system: &LensSystem, wavelength: f64) -> Result<Ladder, ParaxialError> {
    let a = system.epd() / 2.0;
    match system.object_distance() {
        None => Ok(paraxial_trace(system, a, 0.0, wavelength)?),
        Some(s) => {
            let zep = entrance_pupil_position(system, wavelength)?;
            if (zep + s).abs() < 1e-12 {
                return Err(ParaxialError::ObjectAtPupil);
            }
            let u0 = a / (zep + s);
            Ok(paraxial_trace(system, u0 * s, u0, wavelength)?)
        }
    }
}

/// Chief ray for a field angle (degrees) through the centre of the stop.
pub fn chief_ray(
    system: &LensSystem,
    field_deg: f64,
    wavelength: f64,
) -> Result<Ladder, ParaxialError> {
    let zep = entrance_pupil_position(system, wavelength)?;
    let u0 = field_deg.to_radians().tan();
    Ok(paraxial_trace(system, -u0 * zep, u0, wavelength)?)
}

/// Lagrange invariant `n (ū y − u ȳ)` evaluated before refraction at every
/// surface.
pub fn lagrange_invariants(marginal: &Ladder, chief: &Ladder) -> Vec<f64> {
    marginal
        .steps
        .iter()
        .zip(&chief.steps)
        .map(|(m, c)| m.n * (c.u * m.y - m.u * c.y))
        .collect()
}

/// First-order description of a system at its primary wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct ParaxialSummary {
    pub effl: f64,
    /// Back focal distance from the last optical surface.
    pub bfl: f64,
    pub totr: f64,
    pub fno: f64,
    /// Entrance pupil position from the first vertex and its diameter.
    pub entrance_pupil_position: f64,
    pub entrance_pupil_diameter: f64,
    /// Exit pupil z (global), `None` when at infinity.
    pub exit_pupil_z: Option<f64>,
    /// `effl · tan θ` for every field of the system.
    pub image_heights: Vec<f64>,
}

/// Effective and back focal lengths from the infinite-conjugate marginal ray.
pub fn focal_lengths(system: &LensSystem, wavelength: f64) -> Result<(f64, f64), ParaxialError> {
    let y1 = system.epd() / 2.0;
    let ladder = paraxial_trace(system, y1, 0.0, wavelength)?;
    let last = ladder.last_optical();
    if (last.u_after / y1).abs() < AFOCAL_SLOPE {
        return Err(ParaxialError::AfocalSystem);
    }
    Ok((-y1 / last.u_after, -last.y / last.u_after))
}

pub fn system_summary(system: &LensSystem) -> Result<ParaxialSummary, ParaxialError> {
    let wl = system.primary_wavelength();
    let (effl, bfl) = focal_lengths(system, wl)?;
    let zep = entrance_pupil_position(system, wl)?;
    let exit_pupil_z = exit_pupil_z(system, wl)?;
    Ok(ParaxialSummary {
        effl,
        bfl,
        totr: system.total_track(),
        fno: effl / system.epd(),
        entrance_pupil_position: zep,
        entrance_pupil_diameter: system.epd(),
        exit_pupil_z,
        image_heights: system
            .fields()
            .iter()
            .map(|f| effl * f.to_radians().tan())
            .collect(),
    })
}

/// Where the image-space chief ray crosses the axis.
pub fn exit_pupil_z(system: &LensSystem, wavelength: f64) -> Result<Option<f64>, ParaxialError> {
    let chief = chief_ray(system, 1.0, wavelength)?;
    let last = chief.last_optical();
    let z_last = system.vertex_z()[system.image_index() - 1];
    if last.u_after.abs() < 1e-15 {
        return Ok(None);
    }
    Ok(Some(z_last - last.y / last.u_after))
}

/// Replaces the last gap so the paraxial marginal ray focuses on the image
/// plane. A system already in focus is returned unchanged.
pub fn solve_image_plane(system: &LensSystem) -> Result<LensSystem, ParaxialError> {
    let marginal = marginal_ray(system, system.primary_wavelength())?;
    let last = marginal.last_optical();
    if (last.u_after / (system.epd() / 2.0)).abs() < AFOCAL_SLOPE {
        return Err(ParaxialError::AfocalSystem);
    }
    let gap = -last.y / last.u_after;
    let k = system.image_index() - 1;
    let old = system.surface(k).thickness;
    let mut out = system.clone();
    if (gap - old).abs() > 1e-12 * old.abs().max(1.0) {
        out.set_thickness(k, gap);
    }
    Ok(out)
}

/// Image solve with the object re-specified at `object_distance` in front of
/// the first vertex. Returns the refocused system and the paraxial
/// magnification `n u / (n' u')`.
pub fn solve_image_plane_finite(
    system: &LensSystem,
    object_distance: f64,
) -> Result<(LensSystem, f64), ParaxialError> {
    let finite = system
        .clone()
        .with_object_distance(Some(object_distance))
        .map_err(|_| ParaxialError::ObjectAtPupil)?;
    let solved = solve_image_plane(&finite)?;
    let marginal = marginal_ray(&solved, solved.primary_wavelength())?;
    let first = &marginal.steps[0];
    let last = marginal.last_optical();
    let magnification = (first.n * first.u) / (last.n_after * last.u_after);
    Ok((solved, magnification))
}
