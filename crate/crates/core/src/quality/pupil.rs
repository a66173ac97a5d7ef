use std::f64::consts::TAU;

/// Normalized entrance-pupil coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PupilSample {
    pub px: f64,
    pub py: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PupilPattern {
    /// Centre point plus rings `1..=rings`, ring `r` holding `6r` points.
    Hexapolar(usize),
    /// Square `n × n` grid clipped to the unit disk.
    Grid(usize),
}

impl Default for PupilPattern {
    fn default() -> Self {
        PupilPattern::Hexapolar(10)
    }
}

pub fn sample_pupil(pattern: PupilPattern) -> Vec<PupilSample> {
    let points: Vec<(f64, f64)> = match pattern {
        PupilPattern::Hexapolar(rings) => {
            let mut pts = vec![(0.0, 0.0)];
            for r in 1..=rings {
                let rho = r as f64 / rings as f64;
                let count = 6 * r;
                pts.extend((0..count).map(|k| {
                    let phi = TAU * k as f64 / count as f64;
                    (rho * phi.cos(), rho * phi.sin())
                }));
            }
            pts
        }
        PupilPattern::Grid(n) => grid_coordinates(n)
            .flat_map(|py| grid_coordinates(n).map(move |px| (px, py)))
            .filter(|(px, py)| px * px + py * py <= 1.0)
            .collect(),
    };
    let w = 1.0 / points.len().max(1) as f64;
    points
        .into_iter()
        .map(|(px, py)| PupilSample { px, py, weight: w })
        .collect()
}

/// Cell centres `(2i + 1 − n)/n` of an `n`-sample grid across `[−1, 1]`.
pub fn grid_coordinates(n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| (2.0 * i as f64 + 1.0 - n as f64) / n as f64)
}
