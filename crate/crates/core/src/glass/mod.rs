//! Dispersive materials and glass catalogs.
//!
//! A [`Material`] maps a vacuum wavelength in micrometres to a refractive
//! index. Three models are supported: a constant index (used for air and for
//! analytic test systems), the Sellmeier formula and the Schott power series.

mod catalog;

pub use catalog::{GlassCatalog, DEFAULT_CATALOG, RELAY_CATALOG};

use thiserror::Error;

/// Fraunhofer F line (hydrogen), µm.
pub const LINE_F: f64 = 0.486_132_7;
/// Fraunhofer d line (helium), µm.
pub const LINE_D: f64 = 0.587_561_8;
/// Fraunhofer C line (hydrogen), µm.
pub const LINE_C: f64 = 0.656_272_5;

/// Name reserved for the ambient medium.
pub const AIR: &str = "AIR";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlassError {
    #[error("dispersion model of `{name}` gives n^2 = {n_squared} at {wavelength} um")]
    ModelEvaluationFailure {
        name: String,
        wavelength: f64,
        n_squared: f64,
    },
    #[error("Abbe number undefined for `{0}`")]
    UndefinedAbbe(String),
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: duplicate glass `{name}`")]
    DuplicateGlass { line: usize, name: String },
    #[error("line {line}: unknown dispersion model `{model}`")]
    UnknownDispersionModel { line: usize, model: String },
    #[error("reading catalog: {0}")]
    Io(String),
}

/// Dispersion formula with its coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DispersionModel {
    Constant(f64),
    /// `n² − 1 = Σ Bᵢ λ² / (λ² − Cᵢ)` with `Cᵢ` in µm².
    Sellmeier {
        b: [f64; 3],
        c: [f64; 3],
    },
    /// `n² = a0 + a1 λ² + a2 λ⁻² + a3 λ⁻⁴ + a4 λ⁻⁶ + a5 λ⁻⁸`.
    SchottPolynomial([f64; 6]),
}

impl DispersionModel {
    pub fn keyword(&self) -> &'static str {
        match self {
            DispersionModel::Constant(_) => "constant",
            DispersionModel::Sellmeier { .. } => "sellmeier",
            DispersionModel::SchottPolynomial(_) => "schott",
        }
    }

    /// The six coefficients in catalog-file order.
    pub fn coefficients(&self) -> [f64; 6] {
        match *self {
            DispersionModel::Constant(n) => [n, 0.0, 0.0, 0.0, 0.0, 0.0],
            DispersionModel::Sellmeier { b, c } => [b[0], b[1], b[2], c[0], c[1], c[2]],
            DispersionModel::SchottPolynomial(a) => a,
        }
    }

    pub fn from_coefficients(keyword: &str, k: [f64; 6]) -> Option<Self> {
        match keyword.to_ascii_lowercase().as_str() {
            "constant" => Some(DispersionModel::Constant(k[0])),
            "sellmeier" => Some(DispersionModel::Sellmeier {
                b: [k[0], k[1], k[2]],
                c: [k[3], k[4], k[5]],
            }),
            "schott" => Some(DispersionModel::SchottPolynomial(k)),
            _ => None,
        }
    }

    fn n_squared(&self, wavelength: f64) -> f64 {
        let l2 = wavelength * wavelength;
        match *self {
            DispersionModel::Constant(n) => n * n,
            DispersionModel::Sellmeier { b, c } => {
                1.0 + b
                    .iter()
                    .zip(c.iter())
                    .map(|(b, c)| b * l2 / (l2 - c))
                    .sum::<f64>()
            }
            DispersionModel::SchottPolynomial(a) => {
                let inv = 1.0 / l2;
                a[0] + a[1] * l2 + inv * (a[2] + inv * (a[3] + inv * (a[4] + inv * a[5])))
            }
        }
    }
}

/// A named optical material.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    pub model: DispersionModel,
    /// Wavelength interval, µm, over which the coefficients are valid.
    pub valid_range: (f64, f64),
}

impl Material {
    pub fn new(name: impl Into<String>, model: DispersionModel, valid_range: (f64, f64)) -> Self {
        Self {
            name: name.into(),
            model,
            valid_range,
        }
    }

    pub fn air() -> Self {
        Self::constant(AIR, 1.0)
    }

    /// Non-dispersive material, valid at every wavelength.
    pub fn constant(name: impl Into<String>, n: f64) -> Self {
        Self::new(name, DispersionModel::Constant(n), (0.0, f64::INFINITY))
    }

    pub fn is_air(&self) -> bool {
        self.name.eq_ignore_ascii_case(AIR)
    }

    /// Refractive index at `wavelength` (µm). Wavelengths outside the valid
    /// range are extrapolated with a logged warning.
    pub fn refractive_index(&self, wavelength: f64) -> Result<f64, GlassError> {
        if let DispersionModel::Constant(n) = self.model {
            return Ok(n);
        }
        let (lo, hi) = self.valid_range;
        if wavelength < lo || wavelength > hi {
            log::warn!(
                "{}: {} um outside valid range [{}, {}], extrapolating",
                self.name,
                wavelength,
                lo,
                hi
            );
        }
        let n2 = self.model.n_squared(wavelength);
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(GlassError::ModelEvaluationFailure {
                name: self.name.clone(),
                wavelength,
                n_squared: n2,
            });
        }
        Ok(n2.sqrt())
    }

    /// `V_d = (n_d − 1) / (n_F − n_C)`.
    pub fn abbe_number(&self) -> Result<f64, GlassError> {
        let nd = self.refractive_index(LINE_D)?;
        let nf = self.refractive_index(LINE_F)?;
        let nc = self.refractive_index(LINE_C)?;
        if (nd - 1.0).abs() < 1e-9 || (nf - nc).abs() < 1e-12 {
            return Err(GlassError::UndefinedAbbe(self.name.clone()));
        }
        Ok((nd - 1.0) / (nf - nc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n_bk7() -> Material {
        Material::new(
            "N-BK7",
            DispersionModel::Sellmeier {
                b: [1.03961212, 0.231792344, 1.01046945],
                c: [0.00600069867, 0.0200179144, 103.560653],
            },
            (0.3, 2.5),
        )
    }

    #[test]
    fn air_is_exactly_one() {
        for l in [0.3, 0.58756, 1.0, 10.0] {
            assert_eq!(Material::air().refractive_index(l).unwrap(), 1.0);
        }
    }

    #[test]
    fn bk7_d_line() {
        // Sellmeier with the vendor coefficients, evaluated independently.
        let l2: f64 = 0.58756 * 0.58756;
        let n2 = 1.0
            + 1.03961212 * l2 / (l2 - 0.00600069867)
            + 0.231792344 * l2 / (l2 - 0.0200179144)
            + 1.01046945 * l2 / (l2 - 103.560653);
        let n = n_bk7().refractive_index(0.58756).unwrap();
        assert_eq!(n, n2.sqrt());
        assert!((n - 1.5168).abs() < 1e-4);
    }

    #[test]
    fn bk7_abbe() {
        let v = n_bk7().abbe_number().unwrap();
        assert!((v - 64.2).abs() < 0.2, "{v}");
    }

    #[test]
    fn air_abbe_undefined() {
        assert!(matches!(
            Material::air().abbe_number(),
            Err(GlassError::UndefinedAbbe(_))
        ));
    }

    #[test]
    fn negative_n_squared_is_reported() {
        let m = Material::new(
            "BROKEN",
            DispersionModel::SchottPolynomial([-1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            (0.4, 0.7),
        );
        assert!(matches!(
            m.refractive_index(0.5),
            Err(GlassError::ModelEvaluationFailure { .. })
        ));
    }

    #[test]
    fn out_of_range_extrapolates() {
        let n = n_bk7().refractive_index(3.0).unwrap();
        assert!(n > 1.0 && n < 1.6);
    }
}
