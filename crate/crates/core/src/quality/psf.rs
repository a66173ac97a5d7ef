//! FFT point spread function, Strehl ratio and MTF.

use std::f64::consts::TAU;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::paraxial::focal_lengths;
use crate::system::LensSystem;

use super::aim::Bench;
use super::opd::Wavefront;
use super::pupil::grid_coordinates;
use super::QualityError;

pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_PAD: usize = 4;
/// Largest OPD change (waves) tolerated between neighbouring pupil samples.
pub const MAX_OPD_STEP: f64 = 0.5;

/// Sampled pupil: aperture mask and OPD (waves) on an `n × n` grid, row
/// index along y.
#[derive(Debug, Clone, PartialEq)]
pub struct PupilGrid {
    pub n: usize,
    pub mask: Vec<bool>,
    pub opd: Vec<f64>,
    /// Samples inside the geometric aperture, vignetted or not.
    pub aperture_count: usize,
    pub wavelength: f64,
    pub fno: f64,
}

impl PupilGrid {
    /// Unaberrated, unvignetted circular pupil.
    pub fn circular(n: usize, wavelength: f64, fno: f64) -> Self {
        let mask: Vec<bool> = grid_coordinates(n)
            .flat_map(|y| grid_coordinates(n).map(move |x| x * x + y * y <= 1.0))
            .collect();
        let aperture_count = mask.iter().filter(|&&m| m).count();
        PupilGrid {
            n,
            opd: vec![0.0; n * n],
            mask,
            aperture_count,
            wavelength,
            fno,
        }
    }

    /// Pupil coordinates `(px, py)` of sample `(row, col)`.
    pub fn coordinates(&self, row: usize, col: usize) -> (f64, f64) {
        let n = self.n as f64;
        (
            (2.0 * col as f64 + 1.0 - n) / n,
            (2.0 * row as f64 + 1.0 - n) / n,
        )
    }

    /// RMS of the OPD over the unmasked samples, piston removed.
    pub fn rms(&self) -> f64 {
        let vals: Vec<f64> = self
            .opd
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| *v)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len().max(1) as f64).sqrt()
    }

    fn max_step(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                let i = r * n + c;
                if !self.mask[i] {
                    continue;
                }
                if c + 1 < n && self.mask[i + 1] {
                    worst = worst.max((self.opd[i + 1] - self.opd[i]).abs());
                }
                if r + 1 < n && self.mask[i + n] {
                    worst = worst.max((self.opd[i + n] - self.opd[i]).abs());
                }
            }
        }
        worst
    }
}

/// OPD map of one field over an `n × n` pupil grid.
pub fn pupil_grid(
    system: &LensSystem,
    field_deg: f64,
    wavelength: f64,
    n: usize,
) -> Result<PupilGrid, QualityError> {
    if n == 0 {
        return Err(QualityError::BadGrid(
            "pupil grid needs at least one sample".into(),
        ));
    }
    let bench = Bench::new(system)?;
    let (effl, _) = focal_lengths(system, system.primary_wavelength())?;
    let wf = Wavefront::new(&bench, field_deg, wavelength)?;
    let mut grid = PupilGrid::circular(n, wavelength, effl / system.epd());
    let values: Vec<Option<f64>> = (0..n * n)
        .into_par_iter()
        .map(|i| {
            if !grid.mask[i] {
                return None;
            }
            let (px, py) = grid.coordinates(i / n, i % n);
            wf.opd(px, py)
        })
        .collect();
    for (i, v) in values.into_iter().enumerate() {
        match v {
            Some(w) => grid.opd[i] = w,
            None => grid.mask[i] = false,
        }
    }
    Ok(grid)
}

/// Square irradiance grid centred on `(size/2, size/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf {
    pub size: usize,
    /// Image-plane sample spacing, mm.
    pub pitch: f64,
    /// Irradiance normalized to a peak of 1.
    pub data: Vec<f64>,
    /// Sum of the un-normalized irradiance.
    pub total: f64,
    pub strehl: f64,
    pub wavelength: f64,
}

impl Psf {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.size + col]
    }

    /// Irradiance at an image-plane offset (mm) from the centre, bilinear.
    pub fn sample(&self, dx: f64, dy: f64) -> f64 {
        let c = self.size as f64 / 2.0;
        let fx = c + dx / self.pitch;
        let fy = c + dy / self.pitch;
        if fx < 0.0 || fy < 0.0 {
            return 0.0;
        }
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        if x0 + 1 >= self.size || y0 + 1 >= self.size {
            return 0.0;
        }
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let v = |r: usize, col: usize| self.at(r, col);
        (1.0 - ty) * ((1.0 - tx) * v(y0, x0) + tx * v(y0, x0 + 1))
            + ty * ((1.0 - tx) * v(y0 + 1, x0) + tx * v(y0 + 1, x0 + 1))
    }
}

/// In-place 2-D FFT of a row-major `n × n` buffer.
pub(crate) fn fft2(buf: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    fft.process(buf);
    transpose(buf, n);
    fft.process(buf);
    transpose(buf, n);
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

fn pupil_field(grid: &PupilGrid, pad: usize) -> (Vec<Complex64>, usize) {
    let size = grid.n * pad;
    let mut buf = vec![Complex64::new(0.0, 0.0); size * size];
    for r in 0..grid.n {
        for c in 0..grid.n {
            let i = r * grid.n + c;
            if grid.mask[i] {
                buf[r * size + c] = Complex64::from_polar(1.0, TAU * grid.opd[i]);
            }
        }
    }
    (buf, size)
}

/// Unshifted `|FFT(pupil)|²`, DC at index 0.
fn raw_psf(grid: &PupilGrid, pad: usize) -> Result<(Vec<f64>, usize), QualityError> {
    if pad < 2 {
        return Err(QualityError::BadGrid(
            "padding factor must be at least 2".into(),
        ));
    }
    let step = grid.max_step();
    if step > MAX_OPD_STEP {
        return Err(QualityError::GridTooCoarse { max_step: step });
    }
    let (mut buf, size) = pupil_field(grid, pad);
    fft2(&mut buf, size, false);
    Ok((buf.iter().map(|z| z.norm_sqr()).collect(), size))
}

pub fn psf_from_pupil(grid: &PupilGrid, pad: usize) -> Result<Psf, QualityError> {
    let (raw, size) = raw_psf(grid, pad)?;
    let peak = raw.iter().cloned().fold(0.0, f64::max);
    let ideal = (grid.aperture_count as f64).powi(2);
    let total = raw.iter().sum();
    let half = size / 2;
    let mut data = vec![0.0; size * size];
    for r in 0..size {
        for c in 0..size {
            let v = if peak > 0.0 {
                raw[r * size + c] / peak
            } else {
                0.0
            };
            data[((r + half) % size) * size + (c + half) % size] = v;
        }
    }
    Ok(Psf {
        size,
        pitch: grid.wavelength * 1e-3 * grid.fno / pad as f64,
        data,
        total,
        strehl: peak / ideal,
        wavelength: grid.wavelength,
    })
}

pub fn psf_and_strehl(
    system: &LensSystem,
    field_deg: f64,
    grid_n: usize,
    pad: usize,
) -> Result<Psf, QualityError> {
    let grid = pupil_grid(system, field_deg, system.primary_wavelength(), grid_n)?;
    psf_from_pupil(&grid, pad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtfCurve {
    /// Cycles per mm.
    pub frequencies: Vec<f64>,
    /// Modulation for frequency along y and along x.
    pub tangential: Vec<f64>,
    pub sagittal: Vec<f64>,
    pub cutoff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Tangential,
    Sagittal,
}

impl MtfCurve {
    /// Linear interpolation of one slice; zero beyond the last sample.
    pub fn at(&self, frequency: f64, orientation: Orientation) -> f64 {
        let values = match orientation {
            Orientation::Tangential => &self.tangential,
            Orientation::Sagittal => &self.sagittal,
        };
        interpolate(&self.frequencies, values, frequency)
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    match xs.iter().position(|&v| v >= x) {
        None => 0.0,
        Some(i) => {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

/// MTF of a sampled pupil: frequency bin `k` is `k / (n λ N)` and the
/// diffraction cutoff falls on bin `n`.
pub fn mtf_from_pupil(grid: &PupilGrid, pad: usize) -> Result<MtfCurve, QualityError> {
    let (raw, size) = raw_psf(grid, pad)?;
    let mut otf: Vec<Complex64> = raw.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut otf, size, false);
    let dc = otf[0].norm();
    let cutoff = 1.0 / (grid.wavelength * 1e-3 * grid.fno);
    let bins = grid.n;
    let df = cutoff / bins as f64;
    let slice = |idx: &dyn Fn(usize) -> usize| -> Vec<f64> {
        (0..=bins)
            .map(|k| {
                if k >= bins || dc == 0.0 {
                    0.0
                } else {
                    (otf[idx(k)].norm() / dc).min(1.0)
                }
            })
            .collect()
    };
    let mut tangential = slice(&|k| k * size);
    let mut sagittal = slice(&|k| k);
    tangential[0] = 1.0;
    sagittal[0] = 1.0;
    Ok(MtfCurve {
        frequencies: (0..=bins).map(|k| k as f64 * df).collect(),
        tangential,
        sagittal,
        cutoff,
    })
}

pub fn mtf(
    system: &LensSystem,
    field_deg: f64,
    grid_n: usize,
    pad: usize,
) -> Result<MtfCurve, QualityError> {
    let grid = pupil_grid(system, field_deg, system.primary_wavelength(), grid_n)?;
    mtf_from_pupil(&grid, pad)
}

/// Weight-averaged monochromatic MTFs on the primary wavelength's frequency axis.
pub fn polychromatic_mtf(
    system: &LensSystem,
    field_deg: f64,
    grid_n: usize,
    pad: usize,
) -> Result<MtfCurve, QualityError> {
    let curves = system
        .wavelengths()
        .par_iter()
        .map(|w| {
            let grid = pupil_grid(system, field_deg, w.micrometres, grid_n)?;
            Ok((w.weight, mtf_from_pupil(&grid, pad)?))
        })
        .collect::<Result<Vec<_>, QualityError>>()?;
    let base = &curves[system.primary_index()].1;
    let total: f64 = curves.iter().map(|(w, _)| w).sum();
    let average = |o: Orientation| -> Vec<f64> {
        base.frequencies
            .iter()
            .map(|&f| curves.iter().map(|(w, c)| w * c.at(f, o)).sum::<f64>() / total)
            .collect()
    };
    Ok(MtfCurve {
        frequencies: base.frequencies.clone(),
        tangential: average(Orientation::Tangential),
        sagittal: average(Orientation::Sagittal),
        cutoff: base.cutoff,
    })
}

/// Incoherent MTF of an aberration-free circular pupil at normalized frequency `nu`.
pub fn diffraction_limit(nu: f64) -> f64 {
    if nu >= 1.0 {
        return 0.0;
    }
    let nu = nu.max(0.0);
    2.0 / std::f64::consts::PI * (nu.acos() - nu * (1.0 - nu * nu).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glass::Material;
    use crate::paraxial::solve_image_plane;
    use crate::system::{SurfaceNode, Wavelength};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const WL: f64 = 0.58756;
    const FNO: f64 = 9.5 / 3.0;

    #[test]
    fn perfect_pupil_has_unit_strehl_and_peak() {
        let psf = psf_from_pupil(&PupilGrid::circular(32, WL, FNO), 4).unwrap();
        assert!((psf.strehl - 1.0).abs() < 1e-12);
        let peak = psf.data.iter().cloned().fold(0.0, f64::max);
        assert_eq!(peak, 1.0);
        assert_eq!(psf.at(64, 64), 1.0);
        assert!(psf.data.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn psf_energy_is_independent_of_aberration() {
        let mut grid = PupilGrid::circular(32, WL, FNO);
        let e0 = psf_from_pupil(&grid, 2).unwrap().total;
        for (i, v) in grid.opd.iter_mut().enumerate() {
            *v = 0.01 * (i % 32) as f64;
        }
        let e1 = psf_from_pupil(&grid, 2).unwrap().total;
        assert!((e0 - e1).abs() < 1e-9 * e0);
        // Parseval: Σ|F|² = N² Σ|P|²
        let expected = (64.0f64 * 64.0) * grid.aperture_count as f64;
        assert!((e0 - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn aliasing_guard() {
        let mut grid = PupilGrid::circular(16, WL, FNO);
        for (i, v) in grid.opd.iter_mut().enumerate() {
            *v = 0.6 * (i % 16) as f64;
        }
        assert!(matches!(
            psf_from_pupil(&grid, 2),
            Err(QualityError::GridTooCoarse { .. })
        ));
        assert!(matches!(
            psf_from_pupil(&PupilGrid::circular(8, WL, FNO), 1),
            Err(QualityError::BadGrid(_))
        ));
    }

    #[test]
    fn diffraction_limited_mtf_matches_analytic_curve() {
        let curve = mtf_from_pupil(&PupilGrid::circular(64, WL, FNO), 4).unwrap();
        assert!((curve.cutoff - 537.3).abs() < 0.5, "{}", curve.cutoff);
        assert_eq!(curve.tangential[0], 1.0);
        let n = curve.frequencies.len() as f64;
        let rms = (curve
            .frequencies
            .iter()
            .zip(&curve.tangential)
            .map(|(f, m)| (m - diffraction_limit(f / curve.cutoff)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        assert!(rms < 0.005, "{rms}");
        assert_eq!(*curve.tangential.last().unwrap(), 0.0);
    }

    /// Smooth random wavefront from low-order Zernike-like terms, tilt and
    /// piston free, scaled to a given RMS.
    fn random_wavefront(grid: &mut PupilGrid, rms: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeff: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for r in 0..grid.n {
            for c in 0..grid.n {
                let (x, y) = grid.coordinates(r, c);
                let rho2 = x * x + y * y;
                let terms = [
                    2.0 * rho2 - 1.0,
                    x * x - y * y,
                    2.0 * x * y,
                    (3.0 * rho2 - 2.0) * x,
                    (3.0 * rho2 - 2.0) * y,
                    6.0 * rho2 * rho2 - 6.0 * rho2 + 1.0,
                    x * (x * x - 3.0 * y * y),
                ];
                grid.opd[r * grid.n + c] = coeff.iter().zip(terms).map(|(a, t)| a * t).sum();
            }
        }
        let current = grid.rms();
        let mean: f64 = grid
            .opd
            .iter()
            .zip(&grid.mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| v)
            .sum::<f64>()
            / grid.aperture_count as f64;
        for v in grid.opd.iter_mut() {
            *v = (*v - mean) * rms / current;
        }
    }

    #[test]
    fn marechal_approximation() {
        let sigma = 1.0 / 14.0;
        let oracle = (-(TAU * sigma).powi(2)).exp();
        assert!((oracle - 0.8176).abs() < 1e-3);
        for seed in 0..5 {
            let mut grid = PupilGrid::circular(64, WL, FNO);
            random_wavefront(&mut grid, sigma, seed);
            assert!((grid.rms() - sigma).abs() < 1e-12);
            let s = psf_from_pupil(&grid, 4).unwrap().strehl;
            assert!((s - 0.8).abs() < 0.05, "seed {seed}: {s}");
        }
    }

    #[test]
    fn aberrated_mtf_never_exceeds_diffraction_limit() {
        let ideal = mtf_from_pupil(&PupilGrid::circular(32, WL, FNO), 4).unwrap();
        let mut grid = PupilGrid::circular(32, WL, FNO);
        random_wavefront(&mut grid, 0.15, 9);
        let aberrated = mtf_from_pupil(&grid, 4).unwrap();
        for i in 0..ideal.frequencies.len() {
            assert!(aberrated.tangential[i] <= ideal.tangential[i] + 1e-6);
            assert!(aberrated.sagittal[i] <= ideal.sagittal[i] + 1e-6);
            assert!(aberrated.tangential[i] >= 0.0 && aberrated.tangential[i] <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn traced_singlet_mtf_and_polychromatic_average() {
        let sys = LensSystem::new(
            vec![
                SurfaceNode::sphere(50.0, 3.0, Material::constant("G", 1.5)).stop(),
                SurfaceNode::plano(95.0, Material::air()),
                SurfaceNode::image(),
            ],
            2.0,
            vec![0.0],
            vec![
                Wavelength {
                    micrometres: 0.5,
                    weight: 1.0,
                },
                Wavelength {
                    micrometres: 0.6,
                    weight: 1.0,
                },
            ],
            1,
        )
        .unwrap();
        let sys = solve_image_plane(&sys).unwrap();
        let mono = mtf(&sys, 0.0, 32, 4).unwrap();
        let poly = polychromatic_mtf(&sys, 0.0, 32, 4).unwrap();
        assert_eq!(mono.frequencies, poly.frequencies);
        assert_eq!(poly.tangential[0], 1.0);
        // the shorter wavelength has the higher cutoff, so the average
        // stays positive at the primary cutoff
        assert_eq!(*mono.tangential.last().unwrap(), 0.0);
        assert!(poly.at(mono.cutoff * 0.99, Orientation::Tangential) > 0.0);
    }

    #[test]
    fn interpolation_between_bins() {
        let c = MtfCurve {
            frequencies: vec![0.0, 10.0, 20.0],
            tangential: vec![1.0, 0.5, 0.0],
            sagittal: vec![1.0, 0.5, 0.0],
            cutoff: 20.0,
        };
        assert_eq!(c.at(5.0, Orientation::Tangential), 0.75);
        assert_eq!(c.at(30.0, Orientation::Sagittal), 0.0);
    }
}
