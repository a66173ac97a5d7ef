//! Exact ray propagation: surface intersection, vector refraction and optical
//! path accumulation.

use nalgebra::Vector3;
use thiserror::Error;

use crate::glass::GlassError;
use crate::system::{LensSystem, Profile, SurfaceNode};

pub type Vec3 = Vector3<f64>;

/// Rays closer to tangency than this are treated as missing the surface.
const GRAZING: f64 = 1e-12;
/// Largest backward step accepted as "on the surface already".
const BACKWARD_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum TraceError {
    #[error("ray misses the surface")]
    RayMissesSurface,
    #[error("ray lands outside the clear aperture")]
    Vignetted,
    #[error("total internal reflection")]
    TotalInternalReflection,
    #[error("ray direction must be non-zero and wavelength positive")]
    InvalidRay,
}

/// A ray in global coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit direction cosines.
    pub direction: Vec3,
    /// µm.
    pub wavelength: f64,
}

impl Ray {
    /// Normalizes `direction`.
    pub fn new(origin: Vec3, direction: Vec3, wavelength: f64) -> Result<Self, TraceError> {
        let norm = direction.norm();
        if !(norm > 0.0 && norm.is_finite()) || !(wavelength > 0.0) {
            return Err(TraceError::InvalidRay);
        }
        Ok(Self {
            origin,
            direction: direction / norm,
            wavelength,
        })
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Where a ray meets a surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub point: Vec3,
    /// Geometric distance from the ray origin.
    pub distance: f64,
    /// Unit surface normal, oriented along +z at the vertex.
    pub normal: Vec3,
}

/// Unit normal of a conic of revolution at a point given in vertex-local
/// coordinates.
pub fn surface_normal(profile: &Profile, local: &Vec3) -> Vec3 {
    let c = profile.curvature();
    let k = profile.conic();
    Vec3::new(-c * local.x, -c * local.y, 1.0 - c * (1.0 + k) * local.z).normalize()
}

/// Intersects `ray` with a surface whose vertex sits on the axis at `vertex_z`.
///
/// The root on the vertex branch of the profile is returned, so a sphere is
/// met on the hemisphere that contains its vertex.
pub fn intersect(ray: &Ray, surface: &SurfaceNode, vertex_z: f64) -> Result<Hit, TraceError> {
    let c = surface.profile.curvature();
    let k1 = 1.0 + surface.profile.conic();
    let p = ray.origin - Vec3::new(0.0, 0.0, vertex_z);
    let d = ray.direction;

    let a = c * (d.x * d.x + d.y * d.y + k1 * d.z * d.z);
    let b = c * (p.x * d.x + p.y * d.y + k1 * p.z * d.z) - d.z;
    let cc = c * (p.x * p.x + p.y * p.y + k1 * p.z * p.z) - 2.0 * p.z;

    let disc = b * b - a * cc;
    if disc < 0.0 {
        return Err(TraceError::RayMissesSurface);
    }
    let q = -(b + b.signum() * disc.sqrt());
    let mut roots = [f64::NAN; 2];
    if q != 0.0 {
        roots[0] = cc / q;
    }
    if a != 0.0 {
        roots[1] = q / a;
    }
    let on_vertex_branch = |t: f64| {
        let z = p.z + t * d.z;
        t.is_finite() && 1.0 - c * k1 * z > 0.0
    };
    let t = match (on_vertex_branch(roots[0]), on_vertex_branch(roots[1])) {
        (true, false) => roots[0],
        (false, true) => roots[1],
        (true, true) => {
            if roots[0].abs() <= roots[1].abs() {
                roots[0]
            } else {
                roots[1]
            }
        }
        (false, false) => return Err(TraceError::RayMissesSurface),
    };
    if t < -BACKWARD_SLACK {
        return Err(TraceError::RayMissesSurface);
    }
    let local = p + d * t;
    let normal = surface_normal(&surface.profile, &local);
    if d.dot(&normal).abs() < GRAZING {
        return Err(TraceError::RayMissesSurface);
    }
    if let Some(sd) = surface.semi_diameter {
        if local.x.hypot(local.y) > sd {
            return Err(TraceError::Vignetted);
        }
    }
    Ok(Hit {
        point: local + Vec3::new(0.0, 0.0, vertex_z),
        distance: t,
        normal,
    })
}

/// Vector form of Snell's law. The normal may point either way.
pub fn refract_direction(
    incident: &Vec3,
    normal: &Vec3,
    n1: f64,
    n2: f64,
) -> Result<Vec3, TraceError> {
    let n = if incident.dot(normal) < 0.0 {
        -normal
    } else {
        *normal
    };
    let cos_i = incident.dot(&n);
    let mu = n1 / n2;
    let k = 1.0 - mu * mu * (1.0 - cos_i * cos_i);
    if k < 0.0 {
        return Err(TraceError::TotalInternalReflection);
    }
    Ok((incident * mu + n * (k.sqrt() - mu * cos_i)).normalize())
}

/// Angle between a unit direction and a unit normal, folded into [0, π/2].
fn angle_to_normal(d: &Vec3, n: &Vec3) -> f64 {
    d.cross(n).norm().atan2(d.dot(n).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Completed,
    Missed(usize),
    TotalInternalReflection(usize),
    Vignetted(usize),
}

impl TraceStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, TraceStatus::Completed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRecord {
    pub point: Vec3,
    /// Direction after the surface.
    pub direction: Vec3,
    pub normal: Vec3,
    pub incidence_angle: f64,
    pub refraction_angle: f64,
    /// Index before and after the surface.
    pub n_in: f64,
    pub n_out: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    pub records: Vec<SurfaceRecord>,
    /// Σ geometric length × index from the ray origin to the last record.
    pub total_opl: f64,
    pub status: TraceStatus,
}

impl TraceResult {
    pub fn last(&self) -> Option<&SurfaceRecord> {
        self.records.last()
    }
}

/// Traces `ray` through every surface of `system`, image plane included.
pub fn trace_ray(system: &LensSystem, ray: &Ray) -> Result<TraceResult, GlassError> {
    let indices = system.indices(ray.wavelength)?;
    Ok(trace_with_indices(
        system,
        &indices,
        &system.vertex_z(),
        ray,
    ))
}

/// [`trace_ray`] with the index ladder (`LensSystem::indices`) and vertex
/// positions precomputed by the caller.
pub fn trace_with_indices(
    system: &LensSystem,
    indices: &[f64],
    vertex_z: &[f64],
    ray: &Ray,
) -> TraceResult {
    let image = system.image_index();
    let order = 0..system.len();
    run(
        system,
        vertex_z,
        ray,
        order,
        |i| (indices[i], indices[i + 1]),
        image,
    )
}

/// Traces a ray travelling towards −z from image space back to object space,
/// refracting at every surface before the image plane in reverse order.
pub fn trace_reverse(system: &LensSystem, ray: &Ray) -> Result<TraceResult, GlassError> {
    let indices = system.indices(ray.wavelength)?;
    let vertex_z = system.vertex_z();
    let order = (0..system.image_index()).rev();
    Ok(run(
        system,
        &vertex_z,
        ray,
        order,
        |i| (indices[i + 1], indices[i]),
        usize::MAX,
    ))
}

fn run(
    system: &LensSystem,
    vertex_z: &[f64],
    ray: &Ray,
    order: impl Iterator<Item = usize>,
    media: impl Fn(usize) -> (f64, f64),
    no_refraction_at: usize,
) -> TraceResult {
    let mut records = Vec::with_capacity(system.len());
    let mut current = *ray;
    let mut opl = 0.0;
    for i in order {
        let surface = system.surface(i);
        let hit = match intersect(&current, surface, vertex_z[i]) {
            Ok(h) => h,
            Err(e) => {
                let status = match e {
                    TraceError::Vignetted => TraceStatus::Vignetted(i),
                    _ => TraceStatus::Missed(i),
                };
                return TraceResult {
                    records,
                    total_opl: opl,
                    status,
                };
            }
        };
        let (n1, n2) = media(i);
        opl += n1 * hit.distance;
        let outgoing = if i == no_refraction_at || n1 == n2 {
            current.direction
        } else {
            match refract_direction(&current.direction, &hit.normal, n1, n2) {
                Ok(d) => d,
                Err(_) => {
                    return TraceResult {
                        records,
                        total_opl: opl,
                        status: TraceStatus::TotalInternalReflection(i),
                    }
                }
            }
        };
        records.push(SurfaceRecord {
            point: hit.point,
            direction: outgoing,
            normal: hit.normal,
            incidence_angle: angle_to_normal(&current.direction, &hit.normal),
            refraction_angle: angle_to_normal(&outgoing, &hit.normal),
            n_in: n1,
            n_out: if i == no_refraction_at { n1 } else { n2 },
        });
        current = Ray {
            origin: hit.point,
            direction: outgoing,
            wavelength: current.wavelength,
        };
    }
    TraceResult {
        records,
        total_opl: opl,
        status: TraceStatus::Completed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glass::Material;
    use crate::system::SurfaceNode;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn sphere50() -> SurfaceNode {
        SurfaceNode::sphere(50.0, 0.0, Material::air())
    }

    #[test]
    fn axial_ray_hits_vertex() {
        let ray = Ray::new(v(0.0, 0.0, -10.0), v(0.0, 0.0, 1.0), 0.5).unwrap();
        let hit = intersect(&ray, &sphere50(), 0.0).unwrap();
        assert_eq!(hit.point, v(0.0, 0.0, 0.0));
        assert_eq!(hit.distance, 10.0);
    }

    #[test]
    fn parallel_ray_at_height_ten() {
        let ray = Ray::new(v(0.0, 10.0, -10.0), v(0.0, 0.0, 1.0), 0.5).unwrap();
        let hit = intersect(&ray, &sphere50(), 0.0).unwrap();
        // quadratic ray-sphere oracle: z = R - sqrt(R^2 - y^2)
        let expected = 50.0 - (2500.0f64 - 100.0).sqrt();
        assert!((hit.point.z - expected).abs() < 1e-12);
        assert!((hit.point.z - 1.01021).abs() < 1e-5);
        let residual =
            hit.point.x.powi(2) + hit.point.y.powi(2) + (hit.point.z - 50.0).powi(2) - 2500.0;
        assert!(residual.abs() < 1e-10);
    }

    #[test]
    fn ray_above_sphere_misses() {
        let ray = Ray::new(v(0.0, 60.0, -10.0), v(0.0, 0.0, 1.0), 0.5).unwrap();
        assert_eq!(
            intersect(&ray, &sphere50(), 0.0),
            Err(TraceError::RayMissesSurface)
        );
    }

    #[test]
    fn concave_surface_uses_vertex_branch_from_far_away() {
        let s = SurfaceNode::sphere(-50.0, 0.0, Material::air());
        let ray = Ray::new(v(0.0, 5.0, -1000.0), v(0.0, 0.0, 1.0), 0.5).unwrap();
        let hit = intersect(&ray, &s, 0.0).unwrap();
        assert!(hit.point.z.abs() < 1.0, "{}", hit.point.z);
    }

    #[test]
    fn conic_hit_satisfies_sag_equation() {
        let s = SurfaceNode::new(
            Profile::Conic {
                radius: 20.0,
                conic: -0.7,
            },
            0.0,
            Material::air(),
        );
        let ray = Ray::new(v(0.3, 4.0, -5.0), v(0.01, -0.05, 1.0), 0.5).unwrap();
        let h = intersect(&ray, &s, 2.0).unwrap();
        let (x, y, z) = (h.point.x, h.point.y, h.point.z - 2.0);
        let c = 1.0 / 20.0;
        let residual = c * (x * x + y * y) + c * 0.3 * z * z - 2.0 * z;
        assert!(residual.abs() < 1e-10);
    }

    #[test]
    fn semi_diameter_vignettes() {
        let s = SurfaceNode::plano(0.0, Material::air()).with_semi_diameter(1.5);
        let ray = Ray::new(v(0.0, 2.0, -1.0), v(0.0, 0.0, 1.0), 0.5).unwrap();
        assert_eq!(intersect(&ray, &s, 0.0), Err(TraceError::Vignetted));
    }

    #[test]
    fn normal_incidence_passes_straight() {
        let out = refract_direction(&v(0.0, 0.0, 1.0), &v(0.0, 0.0, 1.0), 1.0, 1.5).unwrap();
        assert_eq!(out, v(0.0, 0.0, 1.0));
    }

    #[test]
    fn thirty_degree_refraction() {
        let inc = v(0.5, 0.0, 0.75f64.sqrt());
        let out = refract_direction(&inc, &v(0.0, 0.0, 1.0), 1.0, 1.5).unwrap();
        // scalar Snell: sin t = sin i / 1.5 = 1/3
        let sin_t = 1.0 / 3.0;
        assert!((out.x - sin_t).abs() < 1e-12);
        assert!((out.z - (1.0f64 - sin_t * sin_t).sqrt()).abs() < 1e-12);
        assert!((out.x - 0.3333333).abs() < 1e-7 && (out.z - 0.9428090).abs() < 1e-7);
    }

    #[test]
    fn total_internal_reflection_past_critical_angle() {
        let a = 45f64.to_radians();
        let inc = v(a.sin(), 0.0, a.cos());
        assert_eq!(
            refract_direction(&inc, &v(0.0, 0.0, 1.0), 1.5, 1.0),
            Err(TraceError::TotalInternalReflection)
        );
        // just inside the critical angle of 41.81 degrees
        let a = 41.7f64.to_radians();
        assert!(refract_direction(&v(a.sin(), 0.0, a.cos()), &v(0.0, 0.0, 1.0), 1.5, 1.0).is_ok());
    }

    #[test]
    fn invalid_rays_rejected() {
        assert!(Ray::new(v(0.0, 0.0, 0.0), v(0.0, 0.0, 0.0), 0.5).is_err());
        assert!(Ray::new(v(0.0, 0.0, 0.0), v(0.0, 0.0, 1.0), 0.0).is_err());
        let r = Ray::new(v(0.0, 0.0, 0.0), v(3.0, 0.0, 4.0), 0.5).unwrap();
        assert!((r.direction.norm() - 1.0).abs() < 1e-15);
    }
}
