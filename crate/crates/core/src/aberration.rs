//! Primary (Seidel) aberration coefficients per surface.
//!
//! Coefficients are computed from the paraxial marginal ray (object at
//! infinity at EPD/2, or from the axial object point for a finite
//! conjugate) and the paraxial chief ray at the largest field. With the
//! refraction invariants `A = n(yc + u)` and `Ā = n(ȳc + ū)`, and the
//! Lagrange invariant `H`:
//!
//! ```text
//! S_I   = −A² y Δ(u/n)        S_II = −A Ā y Δ(u/n)     S_III = −Ā² y Δ(u/n)
//! S_IV  = −H² c Δ(1/n)
//! S_V   = Ā [ −Ā² y Δ(1/n²) + c Δ(1/n) ȳ (2Āy − Aȳ) ]   (= Ā/A (S_III + S_IV))
//! ```

use crate::paraxial::{chief_ray, lagrange_invariants, marginal_ray, ParaxialError};
use crate::system::LensSystem;

pub const NAMES: [&str; 5] = ["SPHA", "COMA", "ASTI", "FCUR", "DIST"];

/// Seidel sums of one surface, native length units (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeidelRow {
    pub surface: usize,
    pub coefficients: [f64; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeidelTable {
    pub rows: Vec<SeidelRow>,
    pub sum: [f64; 5],
    /// Wavelength used for the ray data and the wave conversion, µm.
    pub wavelength: f64,
    /// Lagrange invariant of the normalizing ray pair.
    pub lagrange: f64,
}

impl SeidelTable {
    /// Coefficients divided by the wavelength.
    pub fn to_waves(&self, coefficients: &[f64; 5]) -> [f64; 5] {
        let wl_mm = self.wavelength * 1e-3;
        coefficients.map(|c| c / wl_mm)
    }

    pub fn row_waves(&self, i: usize) -> [f64; 5] {
        self.to_waves(&self.rows[i].coefficients)
    }

    pub fn sum_waves(&self) -> [f64; 5] {
        self.to_waves(&self.sum)
    }
}

pub fn seidel_table(system: &LensSystem) -> Result<SeidelTable, ParaxialError> {
    let wl = system.primary_wavelength();
    // afocal systems have no image to refer the aberrations to
    crate::paraxial::focal_lengths(system, wl)?;
    let marginal = marginal_ray(system, wl)?;
    let chief = chief_ray(system, system.max_field(), wl)?;
    let h = lagrange_invariants(&marginal, &chief)[0];

    let mut rows = Vec::with_capacity(system.image_index());
    for i in 0..system.image_index() {
        let c = system.surface(i).profile.curvature();
        let m = &marginal.steps[i];
        let p = &chief.steps[i];
        let (n, n1) = (m.n, m.n_after);
        let a = n * (m.y * c + m.u);
        let abar = n * (p.y * c + p.u);
        let d_u_n = m.u_after / n1 - m.u / n;
        let d_inv_n = 1.0 / n1 - 1.0 / n;
        let d_inv_n2 = 1.0 / (n1 * n1) - 1.0 / (n * n);
        let y = m.y;
        let ybar = p.y;
        let s1 = -a * a * y * d_u_n;
        let s2 = -a * abar * y * d_u_n;
        let s3 = -abar * abar * y * d_u_n;
        let s4 = -h * h * c * d_inv_n;
        let s5 =
            abar * (-abar * abar * y * d_inv_n2 + c * d_inv_n * ybar * (2.0 * abar * y - a * ybar));
        rows.push(SeidelRow {
            surface: i,
            coefficients: [s1, s2, s3, s4, s5],
        });
    }
    let mut sum = [0.0; 5];
    for r in &rows {
        for (s, v) in sum.iter_mut().zip(r.coefficients) {
            *s += v;
        }
    }
    Ok(SeidelTable {
        rows,
        sum,
        wavelength: wl,
        lagrange: h,
    })
}
