//! Extended-object image simulation.
//!
//! The source image spans the field of view: its larger half-dimension maps
//! to the largest system field, linearly in `tan θ`. The output covers the
//! matching paraxial image region with square pixels.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::paraxial::focal_lengths;
use crate::system::LensSystem;
use crate::trace::Vec3;

use super::aim::Bench;
use super::psf::{fft2, psf_and_strehl, Psf, DEFAULT_GRID, DEFAULT_PAD};
use super::pupil::{sample_pupil, PupilPattern};
use super::spot::airy_radius_um;
use super::QualityError;

pub const DEFAULT_SIZE: usize = 512;
const TILE: usize = 512;

/// Row-major grayscale image, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.pixels[row * self.width + col] = v;
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().cloned().fold(0.0, f64::max)
    }
}

/// Block letter "F" on black, strokes one fifth of the frame wide.
pub fn letter_f(size: usize) -> GrayImage {
    let mut img = GrayImage::new(size, size);
    let unit = size as f64 / 10.0;
    let inside = |r: f64, c: f64, r0: f64, r1: f64, c0: f64, c1: f64| {
        r >= r0 * unit && r < r1 * unit && c >= c0 * unit && c < c1 * unit
    };
    for r in 0..size {
        for c in 0..size {
            let (rf, cf) = (r as f64 + 0.5, c as f64 + 0.5);
            let stem = inside(rf, cf, 1.0, 9.0, 2.5, 4.5);
            let top = inside(rf, cf, 1.0, 3.0, 2.5, 8.0);
            let middle = inside(rf, cf, 4.5, 6.0, 2.5, 7.0);
            if stem || top || middle {
                img.set(r, c, 1.0);
            }
        }
    }
    img
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulationMode {
    Geometric,
    Diffraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageSettings {
    pub size: usize,
    /// Pupil sampling per source pixel in geometric mode.
    pub pupil: PupilPattern,
    pub psf_grid: usize,
    pub psf_pad: usize,
}

impl Default for ImageSettings {
    fn default() -> Self {
        ImageSettings {
            size: DEFAULT_SIZE,
            pupil: PupilPattern::Hexapolar(3),
            psf_grid: DEFAULT_GRID,
            psf_pad: DEFAULT_PAD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedImage {
    pub image: GrayImage,
    /// Percentage of launched rays that reached the image plane.
    pub efficiency: f64,
    pub launched: usize,
    /// Image-plane pixel pitch, mm.
    pub pitch: f64,
}

/// Binned `(pixel, weight)` hits with launched and arrived ray counts.
type ChunkTally = (Vec<(usize, f64)>, usize, usize);

/// Frame geometry shared by both modes.
struct Frame {
    /// Angular size of a source pixel as seen from the lens, `tan θ`.
    source_step: f64,
    /// Output pixel pitch, mm.
    pitch: f64,
    size: usize,
    /// Paraxial image height per unit `tan θ`.
    scale: f64,
}

impl Frame {
    fn new(system: &LensSystem, source: &GrayImage, size: usize) -> Result<Self, QualityError> {
        let (effl, _) = focal_lengths(system, system.primary_wavelength())?;
        let tan_max = system.max_field().to_radians().tan();
        if tan_max <= 0.0 {
            return Err(QualityError::BadGrid(
                "image simulation needs a non-zero field".into(),
            ));
        }
        let half = source.width.max(source.height) as f64 / 2.0;
        Ok(Frame {
            source_step: tan_max / half,
            pitch: 2.0 * effl.abs() * tan_max / size as f64,
            size,
            scale: effl,
        })
    }

    fn source_tan(&self, source: &GrayImage, row: usize, col: usize) -> (f64, f64) {
        (
            (col as f64 + 0.5 - source.width as f64 / 2.0) * self.source_step,
            (source.height as f64 / 2.0 - row as f64 - 0.5) * self.source_step,
        )
    }

    fn pixel_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let half = self.size as f64 / 2.0;
        let c = (x / self.pitch + half).floor();
        let r = (half - y / self.pitch).floor();
        let n = self.size as f64;
        (c >= 0.0 && r >= 0.0 && c < n && r < n).then_some((r as usize, c as usize))
    }

    fn centre_of(&self, row: usize, col: usize) -> (f64, f64) {
        let half = self.size as f64 / 2.0;
        (
            (col as f64 + 0.5 - half) * self.pitch,
            (half - row as f64 - 0.5) * self.pitch,
        )
    }
}

pub fn simulate_image(
    system: &LensSystem,
    source: &GrayImage,
    mode: SimulationMode,
    size: usize,
) -> Result<SimulatedImage, QualityError> {
    simulate_image_with(
        system,
        source,
        mode,
        &ImageSettings {
            size,
            ..ImageSettings::default()
        },
    )
}

pub fn simulate_image_with(
    system: &LensSystem,
    source: &GrayImage,
    mode: SimulationMode,
    settings: &ImageSettings,
) -> Result<SimulatedImage, QualityError> {
    if settings.size == 0 || source.width == 0 || source.height == 0 {
        return Err(QualityError::BadGrid("empty image".into()));
    }
    let frame = Frame::new(system, source, settings.size)?;
    match mode {
        SimulationMode::Geometric => geometric(system, source, &frame, settings.pupil),
        SimulationMode::Diffraction => {
            let ideal = ideal_image(source, &frame);
            let psf = psf_and_strehl(system, 0.0, settings.psf_grid, settings.psf_pad)?;
            let (effl, _) = focal_lengths(system, system.primary_wavelength())?;
            let reach = 8.0 * airy_radius_um(psf.wavelength, effl / system.epd()) * 1e-3;
            let kernel = psf_kernel(&psf, frame.pitch, reach);
            Ok(SimulatedImage {
                image: convolve(&ideal, &kernel),
                efficiency: 100.0,
                launched: 0,
                pitch: frame.pitch,
            })
        }
    }
}

fn geometric(
    system: &LensSystem,
    source: &GrayImage,
    frame: &Frame,
    pattern: PupilPattern,
) -> Result<SimulatedImage, QualityError> {
    let bench = Bench::new(system)?;
    let wl = system.primary_wavelength();
    let indices = bench.indices(wl)?;
    let samples = sample_pupil(pattern);
    let lit: Vec<(usize, usize, f64)> = (0..source.height)
        .flat_map(|r| (0..source.width).map(move |c| (r, c)))
        .map(|(r, c)| (r, c, source.get(r, c)))
        .filter(|&(_, _, v)| v > 0.0)
        .collect();

    // per chunk of lit pixels: binned hits and ray counts, merged in order
    let partials: Vec<ChunkTally> = lit
        .par_chunks(256)
        .map(|chunk| {
            let mut hits = Vec::new();
            let (mut launched, mut arrived) = (0usize, 0usize);
            for &(r, c, value) in chunk {
                // light from an object point above the axis travels downwards
                let (tx, ty) = frame.source_tan(source, r, c);
                let beam = bench.paraxial_beam(Vec3::new(-tx, -ty, 1.0), wl, indices.clone());
                let w = value / samples.len() as f64;
                for s in &samples {
                    launched += 1;
                    let result = beam.trace(&bench, s.px, s.py);
                    if !result.status.is_completed() {
                        continue;
                    }
                    arrived += 1;
                    let p = result.last().unwrap().point;
                    if let Some((row, col)) = frame.pixel_of(p.x, p.y) {
                        hits.push((row * frame.size + col, w));
                    }
                }
            }
            (hits, launched, arrived)
        })
        .collect();
    let mut image = GrayImage::new(frame.size, frame.size);
    let (mut launched, mut arrived) = (0, 0);
    for (hits, l, a) in partials {
        launched += l;
        arrived += a;
        for (i, w) in hits {
            image.pixels[i] += w;
        }
    }
    let efficiency = if launched == 0 {
        100.0
    } else {
        100.0 * arrived as f64 / launched as f64
    };
    Ok(SimulatedImage {
        image,
        efficiency,
        launched,
        pitch: frame.pitch,
    })
}

/// Paraxial, aberration-free image of the source, nearest-neighbour sampled.
fn ideal_image(source: &GrayImage, frame: &Frame) -> GrayImage {
    let mut out = GrayImage::new(frame.size, frame.size);
    for r in 0..frame.size {
        for c in 0..frame.size {
            let (x, y) = frame.centre_of(r, c);
            // the image is inverted: tan θ = −h / f
            let (tx, ty) = (-x / frame.scale, -y / frame.scale);
            let col = (tx / frame.source_step + source.width as f64 / 2.0 - 0.5).round();
            let row = (source.height as f64 / 2.0 - 0.5 - ty / frame.source_step).round();
            if col >= 0.0
                && row >= 0.0
                && (col as usize) < source.width
                && (row as usize) < source.height
            {
                out.set(r, c, source.get(row as usize, col as usize));
            }
        }
    }
    out
}

/// Convolution kernel: the PSF resampled (bilinear) at the output pitch out
/// to `reach` mm, normalized to unit sum. Odd side length, centred.
pub fn psf_kernel(psf: &Psf, pitch: f64, reach: f64) -> GrayImage {
    let radius = (reach / pitch).floor() as usize;
    let side = 2 * radius + 1;
    let mut k = GrayImage::new(side, side);
    for r in 0..side {
        for c in 0..side {
            let dx = (c as f64 - radius as f64) * pitch;
            let dy = (r as f64 - radius as f64) * pitch;
            k.set(r, c, psf.sample(dx, dy));
        }
    }
    let sum: f64 = k.pixels.iter().sum();
    if sum > 0.0 {
        k.pixels.iter_mut().for_each(|v| *v /= sum);
    } else {
        k.set(radius, radius, 1.0);
    }
    k
}

/// Same-size linear convolution by FFT overlap-add over square tiles.
pub fn convolve(image: &GrayImage, kernel: &GrayImage) -> GrayImage {
    let (kh, kw) = (kernel.height, kernel.width);
    let (ry, rx) = (kh / 2, kw / 2);
    let tile = TILE.min(image.width.max(image.height));
    let fft_n = (tile + kh.max(kw) - 1).next_power_of_two();

    let mut kspec = vec![Complex64::new(0.0, 0.0); fft_n * fft_n];
    for r in 0..kh {
        for c in 0..kw {
            kspec[r * fft_n + c] = Complex64::new(kernel.get(r, c), 0.0);
        }
    }
    fft2(&mut kspec, fft_n, false);

    let origins: Vec<(usize, usize)> = (0..image.height)
        .step_by(tile)
        .flat_map(|r| (0..image.width).step_by(tile).map(move |c| (r, c)))
        .collect();
    let blocks: Vec<(usize, usize, Vec<Complex64>)> = origins
        .par_iter()
        .filter_map(|&(r0, c0)| {
            let mut buf = vec![Complex64::new(0.0, 0.0); fft_n * fft_n];
            let mut any = false;
            for r in 0..tile.min(image.height - r0) {
                for c in 0..tile.min(image.width - c0) {
                    let v = image.get(r0 + r, c0 + c);
                    if v != 0.0 {
                        any = true;
                        buf[r * fft_n + c] = Complex64::new(v, 0.0);
                    }
                }
            }
            if !any {
                return None;
            }
            fft2(&mut buf, fft_n, false);
            buf.iter_mut().zip(&kspec).for_each(|(a, b)| *a *= b);
            fft2(&mut buf, fft_n, true);
            Some((r0, c0, buf))
        })
        .collect();

    let scale = 1.0 / (fft_n * fft_n) as f64;
    let mut out = GrayImage::new(image.width, image.height);
    let span = tile + kh.max(kw) - 1;
    for (r0, c0, buf) in blocks {
        for r in 0..span.min(fft_n) {
            let Some(orow) = (r0 + r).checked_sub(ry).filter(|&v| v < image.height) else {
                continue;
            };
            for c in 0..span.min(fft_n) {
                let Some(ocol) = (c0 + c).checked_sub(rx).filter(|&v| v < image.width) else {
                    continue;
                };
                out.pixels[orow * image.width + ocol] += buf[r * fft_n + c].re * scale;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glass::Material;
    use crate::paraxial::solve_image_plane;
    use crate::system::SurfaceNode;

    fn relay_like() -> LensSystem {
        let sys = LensSystem::monochromatic(
            vec![
                SurfaceNode::sphere(12.0, 2.0, Material::constant("G", 1.7)).stop(),
                SurfaceNode::sphere(-80.0, 9.0, Material::air()),
                SurfaceNode::image(),
            ],
            1.0,
            vec![0.0, 1.0],
            0.58756,
        )
        .unwrap();
        solve_image_plane(&sys).unwrap()
    }

    fn direct_convolution(image: &GrayImage, kernel: &GrayImage) -> GrayImage {
        let (ry, rx) = (kernel.height as isize / 2, kernel.width as isize / 2);
        let mut out = GrayImage::new(image.width, image.height);
        for r in 0..image.height as isize {
            for c in 0..image.width as isize {
                let mut acc = 0.0;
                for kr in 0..kernel.height as isize {
                    for kc in 0..kernel.width as isize {
                        let (sr, sc) = (r - (kr - ry), c - (kc - rx));
                        if sr >= 0
                            && sc >= 0
                            && sr < image.height as isize
                            && sc < image.width as isize
                        {
                            acc += kernel.get(kr as usize, kc as usize)
                                * image.get(sr as usize, sc as usize);
                        }
                    }
                }
                out.set(r as usize, c as usize, acc);
            }
        }
        out
    }

    #[test]
    fn fft_convolution_matches_direct_sum() {
        let mut img = GrayImage::new(37, 29);
        for (i, v) in img.pixels.iter_mut().enumerate() {
            *v = ((i * 7919) % 13) as f64;
        }
        let mut k = GrayImage::new(5, 5);
        for (i, v) in k.pixels.iter_mut().enumerate() {
            *v = (i % 4) as f64 + 0.5;
        }
        let fast = convolve(&img, &k);
        let slow = direct_convolution(&img, &k);
        for (a, b) in fast.pixels.iter().zip(&slow.pixels) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn delta_source_reproduces_the_kernel() {
        let sys = relay_like();
        let n = 64;
        let mut src = GrayImage::new(n, n);
        src.set(20, 40, 1.0);
        let out = simulate_image(&sys, &src, SimulationMode::Diffraction, n).unwrap();
        let psf = psf_and_strehl(&sys, 0.0, DEFAULT_GRID, DEFAULT_PAD).unwrap();
        let frame = Frame::new(&sys, &src, n).unwrap();
        let (effl, _) = focal_lengths(&sys, 0.58756).unwrap();
        let reach = 8.0 * airy_radius_um(0.58756, effl / sys.epd()) * 1e-3;
        let k = psf_kernel(&psf, frame.pitch, reach);
        let rad = k.width / 2;
        // the image of pixel (20, 40) is inverted about the frame centre
        let (cr, cc) = (n - 1 - 20, n - 1 - 40);
        let peak = k.max();
        for r in 0..k.height {
            for c in 0..k.width {
                let (or, oc) = (cr + r - rad, cc + c - rad);
                assert!((out.image.get(or, oc) - k.get(r, c)).abs() <= 1e-9 * peak);
            }
        }
        let total: f64 = out.image.pixels.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn geometric_mode_counts_rays() {
        let sys = relay_like();
        let src = letter_f(24);
        let out = simulate_image(&sys, &src, SimulationMode::Geometric, 64).unwrap();
        assert_eq!(out.efficiency, 100.0);
        let lit = src.pixels.iter().filter(|&&v| v > 0.0).count();
        assert_eq!(out.launched, lit * 37);
        // every ray landed in the frame and carries its share of the source
        let total: f64 = out.image.pixels.iter().sum();
        assert!((total - lit as f64).abs() < 1e-9);

        let mut blocked = sys.clone();
        blocked.set_semi_diameter(1, Some(0.45));
        let out = simulate_image(&blocked, &src, SimulationMode::Geometric, 64).unwrap();
        assert!(out.efficiency < 100.0 && out.efficiency > 0.0);

        let dark = GrayImage::new(8, 8);
        assert_eq!(
            simulate_image(&sys, &dark, SimulationMode::Geometric, 16)
                .unwrap()
                .efficiency,
            100.0
        );
    }

    #[test]
    fn letter_has_strokes() {
        let f = letter_f(100);
        assert_eq!(f.get(50, 30), 1.0);
        assert_eq!(f.get(15, 70), 1.0);
        assert_eq!(f.get(80, 70), 0.0);
    }
}
