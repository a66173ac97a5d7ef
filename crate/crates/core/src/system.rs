//! The lens prescription shared by every analysis.
//!
//! Sign convention: light travels along +z, a radius is positive when its
//! centre of curvature lies on the +z side of the vertex and thicknesses are
//! positive along the direction of propagation. The first surface vertex sits
//! at z = 0; the last surface is the image plane.

use thiserror::Error;

use crate::glass::{GlassError, Material};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("a system needs at least one optical surface and an image plane")]
    TooFewSurfaces,
    #[error("no surface is marked as the aperture stop")]
    NoStopSurface,
    #[error("more than one surface is marked as the aperture stop")]
    MultipleStops,
    #[error("the image plane cannot be the aperture stop")]
    StopOnImage,
    #[error("surface {0}: radius must be non-zero and finite (use a plano profile)")]
    BadRadius(usize),
    #[error("surface {0}: semi-diameter must be positive")]
    BadSemiDiameter(usize),
    #[error("surface {0}: thickness must be finite")]
    BadThickness(usize),
    #[error("entrance pupil diameter must be positive")]
    BadPupil,
    #[error("field angles must be finite, non-negative and distinct")]
    BadFields,
    #[error("wavelengths must be positive with non-negative weights")]
    BadWavelengths,
    #[error("primary wavelength index {0} out of range")]
    BadPrimary(usize),
    #[error("object distance must be finite and non-zero")]
    BadObjectDistance,
    #[error(transparent)]
    Glass(#[from] GlassError),
}

/// Surface shape about its vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Plano,
    Sphere { radius: f64 },
    Conic { radius: f64, conic: f64 },
}

impl Profile {
    pub fn curvature(&self) -> f64 {
        match *self {
            Profile::Plano => 0.0,
            Profile::Sphere { radius } | Profile::Conic { radius, .. } => 1.0 / radius,
        }
    }

    pub fn conic(&self) -> f64 {
        match *self {
            Profile::Conic { conic, .. } => conic,
            _ => 0.0,
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            Profile::Plano => f64::INFINITY,
            Profile::Sphere { radius } | Profile::Conic { radius, .. } => radius,
        }
    }

    /// Same family with a new curvature; zero curvature becomes plano.
    pub fn with_curvature(&self, c: f64) -> Profile {
        if c == 0.0 {
            return Profile::Plano;
        }
        match *self {
            Profile::Conic { conic, .. } => Profile::Conic {
                radius: 1.0 / c,
                conic,
            },
            _ => Profile::Sphere { radius: 1.0 / c },
        }
    }

    /// Sag z(r) of the profile at radial height `r`, `None` beyond the
    /// profile's edge.
    pub fn sag(&self, r: f64) -> Option<f64> {
        let c = self.curvature();
        let k = self.conic();
        let arg = 1.0 - (1.0 + k) * c * c * r * r;
        if arg < 0.0 {
            return None;
        }
        Some(c * r * r / (1.0 + arg.sqrt()))
    }
}

/// One surface and the gap that follows it.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceNode {
    pub profile: Profile,
    /// Axial distance to the next surface, mm.
    pub thickness: f64,
    /// Medium between this surface and the next.
    pub material: Material,
    /// Clear-aperture half height, mm; `None` is unbounded.
    pub semi_diameter: Option<f64>,
    pub is_stop: bool,
}

impl SurfaceNode {
    pub fn new(profile: Profile, thickness: f64, material: Material) -> Self {
        Self {
            profile,
            thickness,
            material,
            semi_diameter: None,
            is_stop: false,
        }
    }

    pub fn plano(thickness: f64, material: Material) -> Self {
        Self::new(Profile::Plano, thickness, material)
    }

    pub fn sphere(radius: f64, thickness: f64, material: Material) -> Self {
        Self::new(Profile::Sphere { radius }, thickness, material)
    }

    pub fn stop(mut self) -> Self {
        self.is_stop = true;
        self
    }

    pub fn with_semi_diameter(mut self, sd: f64) -> Self {
        self.semi_diameter = Some(sd);
        self
    }

    /// The image plane: plano, zero thickness, air behind it.
    pub fn image() -> Self {
        Self::plano(0.0, Material::air())
    }
}

/// Weighted wavelength, µm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavelength {
    pub micrometres: f64,
    pub weight: f64,
}

/// An ordered sequence of surfaces from object space to the image plane.
#[derive(Debug, Clone, PartialEq)]
pub struct LensSystem {
    surfaces: Vec<SurfaceNode>,
    stop_index: usize,
    epd: f64,
    fields: Vec<f64>,
    wavelengths: Vec<Wavelength>,
    primary: usize,
    /// Distance from the object to the first vertex; `None` is infinity.
    object_distance: Option<f64>,
}

impl LensSystem {
    /// Validates and builds a system. The last surface is the image plane.
    pub fn new(
        surfaces: Vec<SurfaceNode>,
        epd: f64,
        fields: Vec<f64>,
        wavelengths: Vec<Wavelength>,
        primary: usize,
    ) -> Result<Self, SystemError> {
        if surfaces.len() < 2 {
            return Err(SystemError::TooFewSurfaces);
        }
        let stops: Vec<usize> = surfaces
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_stop)
            .map(|(i, _)| i)
            .collect();
        let stop_index = match stops.as_slice() {
            [] => return Err(SystemError::NoStopSurface),
            [i] => *i,
            _ => return Err(SystemError::MultipleStops),
        };
        if stop_index == surfaces.len() - 1 {
            return Err(SystemError::StopOnImage);
        }
        for (i, s) in surfaces.iter().enumerate() {
            let r = s.profile.radius();
            if !matches!(s.profile, Profile::Plano) && (r == 0.0 || !r.is_finite()) {
                return Err(SystemError::BadRadius(i));
            }
            if !s.profile.conic().is_finite() {
                return Err(SystemError::BadRadius(i));
            }
            if let Some(sd) = s.semi_diameter {
                if !(sd > 0.0) {
                    return Err(SystemError::BadSemiDiameter(i));
                }
            }
            if !s.thickness.is_finite() {
                return Err(SystemError::BadThickness(i));
            }
        }
        if !(epd > 0.0 && epd.is_finite()) {
            return Err(SystemError::BadPupil);
        }
        if fields.is_empty()
            || fields
                .iter()
                .any(|f| !(f.is_finite() && *f >= 0.0 && *f < 90.0))
        {
            return Err(SystemError::BadFields);
        }
        for (i, a) in fields.iter().enumerate() {
            if fields[..i].contains(a) {
                return Err(SystemError::BadFields);
            }
        }
        if wavelengths.is_empty()
            || wavelengths
                .iter()
                .any(|w| !(w.micrometres > 0.0 && w.micrometres.is_finite() && w.weight >= 0.0))
        {
            return Err(SystemError::BadWavelengths);
        }
        if primary >= wavelengths.len() {
            return Err(SystemError::BadPrimary(primary));
        }
        Ok(Self {
            surfaces,
            stop_index,
            epd,
            fields,
            wavelengths,
            primary,
            object_distance: None,
        })
    }

    /// Single-wavelength convenience constructor.
    pub fn monochromatic(
        surfaces: Vec<SurfaceNode>,
        epd: f64,
        fields: Vec<f64>,
        wavelength: f64,
    ) -> Result<Self, SystemError> {
        Self::new(
            surfaces,
            epd,
            fields,
            vec![Wavelength {
                micrometres: wavelength,
                weight: 1.0,
            }],
            0,
        )
    }

    /// Re-specifies the object at a finite distance in front of the first
    /// vertex (`None` restores infinity). Used by the image-plane solve and
    /// by first-order analyses; real-ray analyses require infinity.
    pub fn with_object_distance(mut self, distance: Option<f64>) -> Result<Self, SystemError> {
        if let Some(d) = distance {
            if !(d.is_finite() && d != 0.0) {
                return Err(SystemError::BadObjectDistance);
            }
        }
        self.object_distance = distance;
        Ok(self)
    }

    pub fn surfaces(&self) -> &[SurfaceNode] {
        &self.surfaces
    }

    pub fn surface(&self, i: usize) -> &SurfaceNode {
        &self.surfaces[i]
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn stop_index(&self) -> usize {
        self.stop_index
    }

    pub fn image_index(&self) -> usize {
        self.surfaces.len() - 1
    }

    /// Entrance pupil diameter, mm.
    pub fn epd(&self) -> f64 {
        self.epd
    }

    /// Field angles, degrees.
    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn max_field(&self) -> f64 {
        self.fields.iter().cloned().fold(0.0, f64::max)
    }

    pub fn wavelengths(&self) -> &[Wavelength] {
        &self.wavelengths
    }

    pub fn primary_index(&self) -> usize {
        self.primary
    }

    /// Primary wavelength, µm.
    pub fn primary_wavelength(&self) -> f64 {
        self.wavelengths[self.primary].micrometres
    }

    pub fn object_distance(&self) -> Option<f64> {
        self.object_distance
    }

    /// Axial position of every vertex.
    pub fn vertex_z(&self) -> Vec<f64> {
        let mut z = 0.0;
        self.surfaces
            .iter()
            .map(|s| {
                let here = z;
                z += s.thickness;
                here
            })
            .collect()
    }

    /// Sum of the gaps from the first surface to the image plane.
    pub fn total_track(&self) -> f64 {
        self.surfaces[..self.image_index()]
            .iter()
            .map(|s| s.thickness)
            .sum()
    }

    /// Refractive index of the medium in front of each surface followed by
    /// the index behind the last one: `len() + 1` values, object space first.
    pub fn indices(&self, wavelength: f64) -> Result<Vec<f64>, GlassError> {
        let mut out = Vec::with_capacity(self.surfaces.len() + 1);
        out.push(1.0);
        for s in &self.surfaces {
            out.push(s.material.refractive_index(wavelength)?);
        }
        Ok(out)
    }

    pub fn set_thickness(&mut self, i: usize, t: f64) {
        self.surfaces[i].thickness = t;
    }

    pub fn set_curvature(&mut self, i: usize, c: f64) {
        self.surfaces[i].profile = self.surfaces[i].profile.with_curvature(c);
    }

    pub fn set_material(&mut self, i: usize, m: Material) {
        self.surfaces[i].material = m;
    }

    pub fn set_semi_diameter(&mut self, i: usize, sd: Option<f64>) {
        self.surfaces[i].semi_diameter = sd;
    }

    pub fn set_fields(&mut self, fields: Vec<f64>) -> Result<(), SystemError> {
        let probe = Self::new(
            self.surfaces.clone(),
            self.epd,
            fields.clone(),
            self.wavelengths.clone(),
            self.primary,
        )?;
        self.fields = probe.fields;
        Ok(())
    }

    pub fn set_epd(&mut self, epd: f64) -> Result<(), SystemError> {
        if !(epd > 0.0 && epd.is_finite()) {
            return Err(SystemError::BadPupil);
        }
        self.epd = epd;
        Ok(())
    }

    /// Indices of surfaces followed by a non-air medium, excluding the image.
    pub fn glass_surfaces(&self) -> Vec<usize> {
        (0..self.image_index())
            .filter(|&i| !self.surfaces[i].material.is_air())
            .collect()
    }
}
