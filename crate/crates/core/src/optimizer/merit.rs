use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::paraxial::focal_lengths;
use crate::quality::{field_scan_at, rms_wavefront_error, spot_rms, PupilPattern};
use crate::system::LensSystem;

use super::OptimizerError;

/// Merit value assigned when an operand cannot be evaluated.
pub const PENALTY: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperandKind {
    /// Effective focal length, mm.
    Effl,
    /// Total track, mm.
    Totr,
    /// Largest |distortion| over the system fields, percent.
    DistMax,
    /// RMS spot radius of a field (index into the field list), mm.
    SpotRms(usize),
    /// RMS wavefront error of a field, waves, piston removed.
    OpdRms(usize),
}

impl OperandKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            OperandKind::Effl => "EFFL",
            OperandKind::Totr => "TOTR",
            OperandKind::DistMax => "DIST-MAX",
            OperandKind::SpotRms(_) => "SPOT-RMS",
            OperandKind::OpdRms(_) => "OPD-RMS",
        }
    }

    pub fn field(&self) -> Option<usize> {
        match self {
            OperandKind::SpotRms(f) | OperandKind::OpdRms(f) => Some(*f),
            _ => None,
        }
    }
}

impl fmt::Display for OperandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.field() {
            Some(i) => write!(f, "{}({i})", self.keyword()),
            None => f.write_str(self.keyword()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Equals,
    LessThan,
}

impl FromStr for Mode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "equals" | "eq" | "=" => Ok(Mode::Equals),
            "less-than" | "lt" | "<" => Ok(Mode::LessThan),
            _ => Err(()),
        }
    }
}

impl Mode {
    pub fn keyword(&self) -> &'static str {
        match self {
            Mode::Equals => "equals",
            Mode::LessThan => "less-than",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operand {
    pub kind: OperandKind,
    pub target: f64,
    pub weight: f64,
    pub mode: Mode,
}

impl Operand {
    pub fn new(kind: OperandKind, target: f64, weight: f64) -> Self {
        Operand {
            kind,
            target,
            weight,
            mode: Mode::Equals,
        }
    }

    pub fn less_than(mut self) -> Self {
        self.mode = Mode::LessThan;
        self
    }

    fn deviation(&self, value: f64) -> f64 {
        match self.mode {
            Mode::Equals => value - self.target,
            Mode::LessThan => (value - self.target).max(0.0),
        }
    }
}

/// Sampling used by the ray-based operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeritSettings {
    pub spot_rings: usize,
    pub opd_rings: usize,
}

impl Default for MeritSettings {
    fn default() -> Self {
        MeritSettings {
            spot_rings: 6,
            opd_rings: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperandResult {
    pub operand: Operand,
    /// `None` when the analysis failed.
    pub value: Option<f64>,
    pub deviation: f64,
    pub contribution_percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeritReport {
    pub value: f64,
    pub operands: Vec<OperandResult>,
    /// Some operand could not be evaluated; `value` is the penalty.
    pub failed: bool,
}

impl MeritReport {
    /// Residuals `√(wᵢ/Σw)·dᵢ`, whose Euclidean norm is the merit value.
    pub fn residuals(&self) -> Vec<f64> {
        let total: f64 = self.operands.iter().map(|o| o.operand.weight).sum();
        self.operands
            .iter()
            .map(|o| {
                let s = (o.operand.weight / total).sqrt();
                if self.failed {
                    s * PENALTY
                } else {
                    s * o.deviation
                }
            })
            .collect()
    }
}

pub fn validate(operands: &[Operand], system: &LensSystem) -> Result<(), OptimizerError> {
    if !operands.iter().any(|o| o.weight > 0.0) {
        return Err(OptimizerError::EmptyMeritFunction);
    }
    for o in operands {
        if !(o.weight >= 0.0 && o.weight.is_finite() && o.target.is_finite()) {
            return Err(OptimizerError::BadOperand(format!(
                "{}: weight {} target {}",
                o.kind, o.weight, o.target
            )));
        }
        if let Some(f) = o.kind.field() {
            if f >= system.fields().len() {
                return Err(OptimizerError::BadOperand(format!(
                    "{}: no field {f}",
                    o.kind
                )));
            }
        }
    }
    Ok(())
}

pub fn operand_value(
    system: &LensSystem,
    kind: OperandKind,
    settings: &MeritSettings,
) -> Option<f64> {
    match kind {
        OperandKind::Effl => focal_lengths(system, system.primary_wavelength())
            .ok()
            .map(|f| f.0),
        OperandKind::Totr => Some(system.total_track()),
        OperandKind::DistMax => field_scan_at(system, system.fields())
            .ok()
            .map(|s| s.max_abs_distortion()),
        OperandKind::SpotRms(i) => spot_rms(
            system,
            system.fields()[i],
            PupilPattern::Hexapolar(settings.spot_rings),
        )
        .ok(),
        OperandKind::OpdRms(i) => {
            rms_wavefront_error(system, system.fields()[i], settings.opd_rings).ok()
        }
    }
}

/// Weighted RMS `√(Σ wᵢ dᵢ² / Σ wᵢ)` of operand deviations.
pub fn merit_value(
    system: &LensSystem,
    operands: &[Operand],
) -> Result<MeritReport, OptimizerError> {
    merit_value_with(system, operands, &MeritSettings::default())
}

pub fn merit_value_with(
    system: &LensSystem,
    operands: &[Operand],
    settings: &MeritSettings,
) -> Result<MeritReport, OptimizerError> {
    validate(operands, system)?;
    let values: Vec<Option<f64>> = operands
        .par_iter()
        .map(|o| operand_value(system, o.kind, settings).filter(|v| v.is_finite()))
        .collect();
    let failed = values.iter().any(Option::is_none);
    let total_weight: f64 = operands.iter().map(|o| o.weight).sum();
    let mut results: Vec<OperandResult> = operands
        .iter()
        .zip(values)
        .map(|(o, v)| OperandResult {
            operand: *o,
            value: v,
            deviation: v.map_or(PENALTY, |v| o.deviation(v)),
            contribution_percent: 0.0,
        })
        .collect();
    let weighted: Vec<f64> = results
        .iter()
        .map(|r| r.operand.weight * r.deviation * r.deviation)
        .collect();
    let sum: f64 = weighted.iter().sum();
    for (r, w) in results.iter_mut().zip(&weighted) {
        r.contribution_percent = if sum > 0.0 { 100.0 * w / sum } else { 0.0 };
    }
    let value = if failed {
        PENALTY
    } else {
        (sum / total_weight).sqrt()
    };
    Ok(MeritReport {
        value,
        operands: results,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glass::Material;
    use crate::system::SurfaceNode;
    use proptest::prelude::*;

    fn singlet(radius: f64) -> LensSystem {
        LensSystem::monochromatic(
            vec![
                SurfaceNode::sphere(radius, 5.0, Material::constant("G", 1.5)).stop(),
                SurfaceNode::plano(95.0, Material::air()),
                SurfaceNode::image(),
            ],
            10.0,
            vec![0.0, 2.0],
            0.58756,
        )
        .unwrap()
    }

    #[test]
    fn on_target_is_zero() {
        let sys = singlet(50.0);
        let ops = [
            Operand::new(OperandKind::Effl, 100.0, 1.0),
            Operand::new(OperandKind::Totr, 100.0, 1.0),
        ];
        let r = merit_value(&sys, &ops).unwrap();
        assert!(r.value < 1e-12, "{}", r.value);
    }

    #[test]
    fn hand_computed_rms() {
        // deviations 3 and 4, unit weights: √((9 + 16)/2)
        let sys = singlet(50.0);
        let ops = [
            Operand::new(OperandKind::Effl, 97.0, 1.0),
            Operand::new(OperandKind::Totr, 96.0, 1.0),
        ];
        let r = merit_value(&sys, &ops).unwrap();
        assert!((r.value - 3.5355339059327378).abs() < 1e-9, "{}", r.value);
        assert!((r.operands[0].contribution_percent - 36.0).abs() < 1e-6);
        let norm: f64 = r.residuals().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - r.value).abs() < 1e-12);
    }

    #[test]
    fn satisfied_less_than_contributes_nothing() {
        let sys = singlet(50.0);
        let ops = [Operand::new(OperandKind::Totr, 150.0, 1.0).less_than()];
        assert_eq!(merit_value(&sys, &ops).unwrap().value, 0.0);
        let ops = [Operand::new(OperandKind::Totr, 90.0, 1.0).less_than()];
        assert!((merit_value(&sys, &ops).unwrap().value - 10.0).abs() < 1e-9);
    }

    #[test]
    fn empty_and_invalid_operand_lists() {
        let sys = singlet(50.0);
        assert_eq!(
            merit_value(&sys, &[]),
            Err(OptimizerError::EmptyMeritFunction)
        );
        let zero = [Operand::new(OperandKind::Effl, 1.0, 0.0)];
        assert_eq!(
            merit_value(&sys, &zero),
            Err(OptimizerError::EmptyMeritFunction)
        );
        let bad_field = [Operand::new(OperandKind::SpotRms(5), 0.0, 1.0)];
        assert!(matches!(
            merit_value(&sys, &bad_field),
            Err(OptimizerError::BadOperand(_))
        ));
    }

    #[test]
    fn analysis_failure_is_a_penalty() {
        let mut sys = singlet(50.0);
        sys.set_semi_diameter(1, Some(1e-6));
        sys.set_fields(vec![0.0, 20.0]).unwrap();
        let ops = [Operand::new(OperandKind::SpotRms(1), 0.0, 1.0)];
        let r = merit_value(&sys, &ops).unwrap();
        assert!(r.failed);
        assert_eq!(r.value, PENALTY);
    }

    #[test]
    fn ray_operands_are_evaluated() {
        let sys = crate::paraxial::solve_image_plane(&singlet(50.0)).unwrap();
        let ops = [
            Operand::new(OperandKind::SpotRms(0), 0.0, 1.0),
            Operand::new(OperandKind::OpdRms(1), 0.0, 1.0),
            Operand::new(OperandKind::DistMax, 0.0, 1.0),
        ];
        let r = merit_value(&sys, &ops).unwrap();
        assert!(!r.failed);
        assert!(r.operands.iter().all(|o| o.value.unwrap() > 0.0));
    }

    proptest! {
        #[test]
        fn weight_scaling_and_permutation_invariance(
            w in proptest::collection::vec(0.1f64..10.0, 3),
            t in proptest::collection::vec(50.0f64..150.0, 3),
            scale in 0.01f64..100.0,
            rot in 0usize..3,
        ) {
            let sys = singlet(50.0);
            let kinds = [OperandKind::Effl, OperandKind::Totr, OperandKind::Effl];
            let ops: Vec<Operand> = (0..3).map(|i| Operand::new(kinds[i], t[i], w[i])).collect();
            let base = merit_value(&sys, &ops).unwrap().value;
            let scaled: Vec<Operand> = ops.iter().map(|o| Operand { weight: o.weight * scale, ..*o }).collect();
            let mut rotated = ops.clone();
            rotated.rotate_left(rot);
            prop_assert!((merit_value(&sys, &scaled).unwrap().value - base).abs() <= 1e-12 * base.max(1.0));
            prop_assert!((merit_value(&sys, &rotated).unwrap().value - base).abs() <= 1e-12 * base.max(1.0));
        }
    }
}
