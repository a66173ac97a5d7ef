//! Optical path difference against a reference sphere centred on the
//! chief-ray image point.

use rayon::prelude::*;

use crate::system::LensSystem;
use crate::trace::{TraceResult, Vec3};

use super::aim::{Beam, Bench};
use super::QualityError;

/// Reference sphere for one field and wavelength.
#[derive(Debug, Clone)]
pub struct Wavefront<'a> {
    bench: &'a Bench<'a>,
    beam: Beam,
    centre: Vec3,
    /// Signed distance from the exit pupil to the image point along the
    /// chief ray; `None` for an exit pupil at infinity.
    radius: Option<f64>,
    n_image: f64,
    chief_path: f64,
    wavelength_mm: f64,
}

impl<'a> Wavefront<'a> {
    pub fn new(
        bench: &'a Bench<'a>,
        field_deg: f64,
        wavelength: f64,
    ) -> Result<Self, QualityError> {
        let (beam, chief) = bench.aimed_beam(field_deg, wavelength)?;
        if !chief.status.is_completed() {
            return Err(QualityError::ChiefRayBlocked { field_deg });
        }
        let end = chief.last().unwrap();
        let centre = end.point;
        let radius = bench
            .exit_pupil_z
            .map(|z| (centre - Vec3::new(0.0, 0.0, z)).dot(&end.direction));
        let ray = beam.ray(bench, 0.0, 0.0);
        let chief_path = beam.optical_path(&ray, &chief);
        Ok(Wavefront {
            bench,
            n_image: end.n_out,
            beam,
            centre,
            radius,
            chief_path,
            wavelength_mm: wavelength * 1e-3,
        })
    }

    pub fn image_point(&self) -> Vec3 {
        self.centre
    }

    /// OPD in waves of the ray through pupil point `(px, py)`; `None` when
    /// the ray does not reach the image.
    pub fn opd(&self, px: f64, py: f64) -> Option<f64> {
        if px == 0.0 && py == 0.0 {
            return Some(0.0);
        }
        let ray = self.beam.ray(self.bench, px, py);
        let result = crate::trace::trace_with_indices(
            self.bench.system,
            &self.beam.indices,
            &self.bench.vertex_z,
            &ray,
        );
        self.opd_of(&self.beam.optical_path(&ray, &result), &result)
    }

    fn opd_of(&self, path: &f64, result: &TraceResult) -> Option<f64> {
        if !result.status.is_completed() {
            return None;
        }
        let end = result.last()?;
        let w = end.point - self.centre;
        let b = end.direction.dot(&w);
        // back-propagation to the sphere, relative to the chief's radius
        let back = match self.radius {
            None => b,
            Some(r) => {
                let e = b * b - w.norm_squared();
                let root = (r * r + e).max(0.0).sqrt();
                b + r.signum() * e / (root + r.abs())
            }
        };
        let ray_path = path - self.n_image * back;
        Some((self.chief_path - ray_path) / self.wavelength_mm)
    }
}

/// One arm of an OPD fan: pupil coordinate and OPD (waves), `None` for a gap.
pub type FanArm = Vec<(f64, Option<f64>)>;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldFan {
    pub field_deg: f64,
    /// Samples along `py` with `px = 0`.
    pub tangential: FanArm,
    /// Samples along `px` with `py = 0`.
    pub sagittal: FanArm,
}

impl FieldFan {
    pub fn max_abs(&self) -> f64 {
        self.tangential
            .iter()
            .chain(&self.sagittal)
            .filter_map(|(_, v)| v.map(f64::abs))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpdFan {
    pub wavelength: f64,
    pub fields: Vec<FieldFan>,
}

impl OpdFan {
    pub fn max_abs(&self) -> f64 {
        self.fields
            .iter()
            .map(FieldFan::max_abs)
            .fold(0.0, f64::max)
    }
}

/// Pupil coordinates from −1 to 1 with `n` samples per arm (at least 2),
/// including the centre when `n` is odd.
pub fn fan_coordinates(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn opd_fan(system: &LensSystem, samples_per_arm: usize) -> Result<OpdFan, QualityError> {
    opd_fan_at(system, system.primary_wavelength(), samples_per_arm)
}

pub fn opd_fan_at(
    system: &LensSystem,
    wavelength: f64,
    samples_per_arm: usize,
) -> Result<OpdFan, QualityError> {
    let bench = Bench::new(system)?;
    let coords = fan_coordinates(samples_per_arm);
    let fields = system
        .fields()
        .par_iter()
        .map(|&field_deg| {
            let wf = Wavefront::new(&bench, field_deg, wavelength)?;
            Ok(FieldFan {
                field_deg,
                tangential: coords.iter().map(|&p| (p, wf.opd(0.0, p))).collect(),
                sagittal: coords.iter().map(|&p| (p, wf.opd(p, 0.0))).collect(),
            })
        })
        .collect::<Result<Vec<_>, QualityError>>()?;
    Ok(OpdFan { wavelength, fields })
}

/// RMS wavefront error (waves) over a hexapolar pupil sampling with the
/// mean (piston) removed.
pub fn rms_wavefront_error(
    system: &LensSystem,
    field_deg: f64,
    rings: usize,
) -> Result<f64, QualityError> {
    let bench = Bench::new(system)?;
    let wf = Wavefront::new(&bench, field_deg, system.primary_wavelength())?;
    let values: Vec<f64> = super::pupil::sample_pupil(super::pupil::PupilPattern::Hexapolar(rings))
        .iter()
        .filter_map(|s| wf.opd(s.px, s.py))
        .collect();
    if values.is_empty() {
        return Err(QualityError::NoUnvignettedRays { field_deg });
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok((values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt())
}
