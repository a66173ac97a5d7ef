//! Ray launching: real chief-ray aiming and pupil rays around it.

use crate::paraxial::{entrance_pupil_position, exit_pupil_z};
use crate::system::LensSystem;
use crate::trace::{trace_with_indices, Ray, TraceResult, Vec3};

use super::QualityError;

/// Stop-centre miss below which the Newton iteration stops early.
const AIM_TARGET: f64 = 1e-13;
/// Largest stop-centre miss still accepted as an aimed chief ray.
pub const AIM_TOLERANCE: f64 = 1e-9;
const AIM_MAX_ITER: usize = 60;

/// Precomputed geometry shared by every ray launched into one system.
#[derive(Debug, Clone)]
pub struct Bench<'a> {
    pub system: &'a LensSystem,
    pub vertex_z: Vec<f64>,
    /// Plane the rays start from, in front of the first surface.
    pub launch_z: f64,
    /// Paraxial entrance pupil plane and radius at the primary wavelength.
    pub pupil_z: f64,
    pub pupil_radius: f64,
    /// Paraxial exit pupil (global z) at the primary wavelength.
    pub exit_pupil_z: Option<f64>,
}

impl<'a> Bench<'a> {
    pub fn new(system: &'a LensSystem) -> Result<Self, QualityError> {
        if system.object_distance().is_some() {
            return Err(QualityError::FiniteConjugate);
        }
        let wl = system.primary_wavelength();
        let first = system.surface(0);
        let reach = first.semi_diameter.unwrap_or(system.epd().max(1.0) * 4.0);
        let sag = first
            .profile
            .sag(reach)
            .unwrap_or(first.profile.radius().abs());
        let launch_z = -(sag.abs() + 10.0);
        Ok(Bench {
            system,
            vertex_z: system.vertex_z(),
            launch_z,
            pupil_z: entrance_pupil_position(system, wl)?,
            pupil_radius: system.epd() / 2.0,
            exit_pupil_z: exit_pupil_z(system, wl)?,
        })
    }

    pub fn indices(&self, wavelength: f64) -> Result<Vec<f64>, QualityError> {
        Ok(self.system.indices(wavelength)?)
    }

    /// Moves `point` along `direction` onto the launch plane.
    fn to_launch_plane(&self, point: Vec3, direction: &Vec3) -> Vec3 {
        point - direction * ((point.z - self.launch_z) / direction.z)
    }

    /// Beam aimed at the paraxial entrance pupil centre, no iteration.
    pub fn paraxial_beam(&self, direction: Vec3, wavelength: f64, indices: Vec<f64>) -> Beam {
        let direction = direction.normalize();
        let centre = Vec3::new(0.0, 0.0, self.pupil_z);
        Beam {
            direction,
            wavelength,
            origin: self.to_launch_plane(centre, &direction),
            pupil_centre: centre,
            indices,
        }
    }

    /// Beam whose central ray passes through the centre of the stop.
    pub fn aimed_beam(
        &self,
        field_deg: f64,
        wavelength: f64,
    ) -> Result<(Beam, TraceResult), QualityError> {
        let theta = field_deg.to_radians();
        let direction = Vec3::new(0.0, theta.sin(), theta.cos());
        let indices = self.indices(wavelength)?;
        let mut beam = self.paraxial_beam(direction, wavelength, indices);
        let stop = self.system.stop_index();

        let miss = |origin: Vec3| -> Option<(f64, f64)> {
            let ray = Ray {
                origin,
                direction: beam.direction,
                wavelength,
            };
            let result = trace_with_indices(self.system, &beam.indices, &self.vertex_z, &ray);
            result.records.get(stop).map(|r| (r.point.x, r.point.y))
        };
        let mut origin = beam.origin;
        let mut residual = miss(origin).ok_or(QualityError::ChiefRayAiming { field_deg })?;
        let norm = |r: (f64, f64)| r.0.hypot(r.1);
        let h = 1e-7 * self.pupil_radius.max(1e-3);
        for _ in 0..AIM_MAX_ITER {
            if norm(residual) <= AIM_TARGET {
                break;
            }
            let rx = miss(origin + Vec3::new(h, 0.0, 0.0));
            let ry = miss(origin + Vec3::new(0.0, h, 0.0));
            let (Some(rx), Some(ry)) = (rx, ry) else {
                return Err(QualityError::ChiefRayAiming { field_deg });
            };
            let j = [
                [(rx.0 - residual.0) / h, (ry.0 - residual.0) / h],
                [(rx.1 - residual.1) / h, (ry.1 - residual.1) / h],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-300 {
                return Err(QualityError::ChiefRayAiming { field_deg });
            }
            let dx = -(j[1][1] * residual.0 - j[0][1] * residual.1) / det;
            let dy = -(-j[1][0] * residual.0 + j[0][0] * residual.1) / det;
            let mut scale = 1.0;
            let mut improved = false;
            while scale > 1e-6 {
                let trial = origin + Vec3::new(dx * scale, dy * scale, 0.0);
                if let Some(r) = miss(trial) {
                    if norm(r) < norm(residual) {
                        origin = trial;
                        residual = r;
                        improved = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if norm(residual) > AIM_TOLERANCE {
            return Err(QualityError::ChiefRayAiming { field_deg });
        }
        beam.origin = origin;
        beam.pupil_centre =
            origin + beam.direction * ((self.pupil_z - origin.z) / beam.direction.z);
        let chief = beam.trace(self, 0.0, 0.0);
        Ok((beam, chief))
    }
}

/// A collimated bundle of rays from one field direction at one wavelength.
#[derive(Debug, Clone)]
pub struct Beam {
    pub direction: Vec3,
    pub wavelength: f64,
    /// Central ray start on the launch plane.
    pub origin: Vec3,
    /// Central ray crossing of the paraxial entrance pupil plane.
    pub pupil_centre: Vec3,
    pub indices: Vec<f64>,
}

impl Beam {
    /// Ray through the entrance pupil point `(px, py)` in units of the pupil radius.
    pub fn ray(&self, bench: &Bench, px: f64, py: f64) -> Ray {
        let origin = if px == 0.0 && py == 0.0 {
            self.origin
        } else {
            let p = self.pupil_centre
                + Vec3::new(px * bench.pupil_radius, py * bench.pupil_radius, 0.0);
            bench.to_launch_plane(p, &self.direction)
        };
        Ray {
            origin,
            direction: self.direction,
            wavelength: self.wavelength,
        }
    }

    pub fn trace(&self, bench: &Bench, px: f64, py: f64) -> TraceResult {
        let ray = self.ray(bench, px, py);
        trace_with_indices(bench.system, &self.indices, &bench.vertex_z, &ray)
    }

    /// Optical path from the object-space plane wavefront through the
    /// coordinate origin to the end of `result`.
    pub fn optical_path(&self, ray: &Ray, result: &TraceResult) -> f64 {
        self.indices[0] * ray.origin.dot(&self.direction) + result.total_opl
    }
}
