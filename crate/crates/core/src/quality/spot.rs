use rayon::prelude::*;

use crate::paraxial::focal_lengths;
use crate::system::LensSystem;

use super::aim::Bench;
use super::pupil::{sample_pupil, PupilPattern};
use super::QualityError;

/// Spot of one field at one wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct Spot {
    pub field_deg: f64,
    pub wavelength: f64,
    /// Image-plane `(x, y)` of every surviving ray, mm.
    pub hits: Vec<(f64, f64)>,
    pub centroid: (f64, f64),
    /// Chief-ray image point, mm.
    pub chief: (f64, f64),
    /// RMS radius about the centroid and largest distance from the chief ray, µm.
    pub rms_radius: f64,
    pub geo_radius: f64,
    /// Radial distance of the chief-ray image point from the axis (IMA), mm.
    pub image_height: f64,
    pub launched: usize,
    pub lost: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpotReport {
    /// One entry per field × wavelength, fields outermost.
    pub spots: Vec<Spot>,
    /// `1.22 λ N` at the primary wavelength, µm.
    pub airy_radius: f64,
}

impl SpotReport {
    pub fn spot(&self, field: usize, wavelength: usize, n_wavelengths: usize) -> &Spot {
        &self.spots[field * n_wavelengths + wavelength]
    }
}

pub fn airy_radius_um(wavelength_um: f64, fno: f64) -> f64 {
    1.22 * wavelength_um * fno
}

pub fn spot_diagram(
    system: &LensSystem,
    pattern: PupilPattern,
) -> Result<SpotReport, QualityError> {
    let bench = Bench::new(system)?;
    let samples = sample_pupil(pattern);
    let wl = system.primary_wavelength();
    let (effl, _) = focal_lengths(system, wl)?;
    let fno = effl / system.epd();

    let jobs: Vec<(f64, f64)> = system
        .fields()
        .iter()
        .flat_map(|&f| system.wavelengths().iter().map(move |w| (f, w.micrometres)))
        .collect();
    let spots: Vec<Result<Spot, QualityError>> = jobs
        .par_iter()
        .map(|&(field, wavelength)| {
            let (beam, chief) = bench.aimed_beam(field, wavelength)?;
            let chief_point = chief
                .status
                .is_completed()
                .then(|| chief.last().map(|r| (r.point.x, r.point.y)))
                .flatten();
            let hits: Vec<(f64, f64)> = samples
                .iter()
                .filter_map(|s| {
                    let r = beam.trace(&bench, s.px, s.py);
                    r.status
                        .is_completed()
                        .then(|| r.last().map(|p| (p.point.x, p.point.y)))
                        .flatten()
                })
                .collect();
            Ok(summarize(
                field,
                wavelength,
                hits,
                chief_point,
                samples.len(),
            ))
        })
        .collect();
    let spots = spots.into_iter().collect::<Result<Vec<_>, _>>()?;

    let per_field = system.wavelengths().len();
    for (i, chunk) in spots.chunks(per_field).enumerate() {
        if chunk.iter().all(|s| s.hits.is_empty()) {
            return Err(QualityError::NoUnvignettedRays {
                field_deg: system.fields()[i],
            });
        }
    }
    Ok(SpotReport {
        spots,
        airy_radius: airy_radius_um(wl, fno),
    })
}

/// Polychromatic RMS spot radius (mm) of one field: every ray carries its
/// wavelength's weight and distances are taken about the common centroid.
pub fn spot_rms(
    system: &LensSystem,
    field_deg: f64,
    pattern: PupilPattern,
) -> Result<f64, QualityError> {
    let bench = Bench::new(system)?;
    let samples = sample_pupil(pattern);
    let mut hits: Vec<(f64, f64, f64)> = Vec::new();
    for w in system.wavelengths() {
        let (beam, _) = bench.aimed_beam(field_deg, w.micrometres)?;
        hits.extend(samples.iter().filter_map(|s| {
            let r = beam.trace(&bench, s.px, s.py);
            r.status
                .is_completed()
                .then(|| r.last().map(|p| (p.point.x, p.point.y, w.weight)))
                .flatten()
        }));
    }
    let total: f64 = hits.iter().map(|h| h.2).sum();
    if hits.is_empty() || total <= 0.0 {
        return Err(QualityError::NoUnvignettedRays { field_deg });
    }
    let cx = hits.iter().map(|h| h.2 * h.0).sum::<f64>() / total;
    let cy = hits.iter().map(|h| h.2 * h.1).sum::<f64>() / total;
    let second = hits
        .iter()
        .map(|h| h.2 * ((h.0 - cx).powi(2) + (h.1 - cy).powi(2)))
        .sum::<f64>();
    Ok((second / total).sqrt())
}

fn summarize(
    field_deg: f64,
    wavelength: f64,
    hits: Vec<(f64, f64)>,
    chief: Option<(f64, f64)>,
    launched: usize,
) -> Spot {
    let count = hits.len().max(1) as f64;
    let centroid = (
        hits.iter().map(|h| h.0).sum::<f64>() / count,
        hits.iter().map(|h| h.1).sum::<f64>() / count,
    );
    let chief_point = chief.unwrap_or(centroid);
    let rms = (hits
        .iter()
        .map(|h| (h.0 - centroid.0).powi(2) + (h.1 - centroid.1).powi(2))
        .sum::<f64>()
        / count)
        .sqrt();
    let geo = hits
        .iter()
        .map(|h| (h.0 - chief_point.0).hypot(h.1 - chief_point.1))
        .fold(0.0, f64::max);
    Spot {
        field_deg,
        wavelength,
        centroid,
        chief: chief_point,
        rms_radius: rms * 1e3,
        geo_radius: geo * 1e3,
        image_height: chief_point.0.hypot(chief_point.1),
        launched,
        lost: launched - hits.len(),
        hits,
    }
}
