//! Astigmatic field curves (Coddington close-ray trace along the real chief
//! ray) and real-ray distortion.

use rayon::prelude::*;

use crate::paraxial::chief_ray;
use crate::system::{LensSystem, Profile};
use crate::trace::TraceResult;

use super::aim::Bench;
use super::QualityError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub field_deg: f64,
    /// Axial distance from the image plane to the tangential / sagittal focus, mm.
    pub tangential_shift: f64,
    pub sagittal_shift: f64,
    pub distortion_percent: f64,
    /// Real and paraxial chief-ray heights on the image plane, mm.
    pub real_height: f64,
    pub paraxial_height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldScan {
    pub wavelength: f64,
    pub samples: Vec<FieldSample>,
}

impl FieldScan {
    pub fn max_abs_distortion(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.distortion_percent.abs())
            .fold(0.0, f64::max)
    }
}

/// `n` fields evenly spaced from 0 to the largest system field (just 0 when `n < 2`).
pub fn field_samples(system: &LensSystem, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    let max = system.max_field();
    (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect()
}

pub fn field_curves_distortion(
    system: &LensSystem,
    n_samples: usize,
) -> Result<FieldScan, QualityError> {
    field_scan_at(system, &field_samples(system, n_samples))
}

/// Field curves and distortion at arbitrary field angles (degrees).
pub fn field_scan_at(system: &LensSystem, fields: &[f64]) -> Result<FieldScan, QualityError> {
    let bench = Bench::new(system)?;
    let wl = system.primary_wavelength();
    let samples = fields
        .par_iter()
        .map(|&f| sample(&bench, f, wl))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FieldScan {
        wavelength: wl,
        samples,
    })
}

fn sample(bench: &Bench, field_deg: f64, wl: f64) -> Result<FieldSample, QualityError> {
    let system = bench.system;
    let (_, chief) = bench.aimed_beam(field_deg, wl)?;
    if !chief.status.is_completed() {
        return Err(QualityError::ChiefRayBlocked { field_deg });
    }
    let (tangential_shift, sagittal_shift) = coddington(system, &chief);
    let real_height = chief.last().unwrap().point.y;
    let paraxial_height = chief_ray(system, field_deg, wl)?.at_image().y;
    let distortion_percent = if field_deg == 0.0 {
        0.0
    } else {
        100.0 * (real_height - paraxial_height) / paraxial_height
    };
    Ok(FieldSample {
        field_deg,
        tangential_shift,
        sagittal_shift,
        distortion_percent,
        real_height,
        paraxial_height,
    })
}

/// Principal curvatures (tangential, sagittal) of a surface at radial height `r`.
fn principal_curvatures(profile: &Profile, r: f64) -> (f64, f64) {
    let c = profile.curvature();
    let q = 1.0 - profile.conic() * c * c * r * r;
    (c / q.powf(1.5), c / q.sqrt())
}

/// Traces the close tangential and sagittal foci along `chief` and returns
/// their axial offsets from the image plane.
fn coddington(system: &LensSystem, chief: &TraceResult) -> (f64, f64) {
    let image = system.image_index();
    let records = &chief.records;
    // reciprocal object distances along the ray, 0 for a distant object
    let (mut inv_t, mut inv_s) = (0.0f64, 0.0f64);
    for i in 0..image {
        let rec = &records[i];
        if i > 0 {
            let d = (rec.point - records[i - 1].point).norm();
            inv_t /= 1.0 - d * inv_t;
            inv_s /= 1.0 - d * inv_s;
        }
        let (n, n1) = (rec.n_in, rec.n_out);
        let (cos_i, cos_r) = (rec.incidence_angle.cos(), rec.refraction_angle.cos());
        let r = rec.point.x.hypot(rec.point.y);
        let (k_t, k_s) = principal_curvatures(&system.surface(i).profile, r);
        let power = n1 * cos_r - n * cos_i;
        inv_t = (n * cos_i * cos_i * inv_t + power * k_t) / (n1 * cos_r * cos_r);
        inv_s = (n * inv_s + power * k_s) / n1;
    }
    let last = &records[image - 1];
    let d_img = (records[image].point - last.point).norm();
    let dz = last.direction.z;
    let shift = |inv: f64| (1.0 / inv - d_img) * dz;
    (shift(inv_t), shift(inv_s))
}
