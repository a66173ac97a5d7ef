use crate::system::{LensSystem, Profile};

use super::OptimizerError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variable {
    /// Surface curvature (1/mm) with optional bounds.
    Curvature {
        surface: usize,
        bounds: Option<(f64, f64)>,
    },
    /// Gap after the surface (mm) with optional bounds.
    Thickness {
        surface: usize,
        bounds: Option<(f64, f64)>,
    },
    /// Glass after the surface, drawn from a catalog.
    Material { surface: usize },
}

impl Variable {
    pub fn surface(&self) -> usize {
        match *self {
            Variable::Curvature { surface, .. }
            | Variable::Thickness { surface, .. }
            | Variable::Material { surface } => surface,
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Variable::Material { .. })
    }

    fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Variable::Curvature { bounds, .. } | Variable::Thickness { bounds, .. } => bounds,
            Variable::Material { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VariableSet {
    pub entries: Vec<Variable>,
}

impl VariableSet {
    pub fn new(entries: Vec<Variable>) -> Self {
        VariableSet { entries }
    }

    /// Every curved surface outside the stop plus every glass.
    pub fn default_for(system: &LensSystem) -> Self {
        let mut entries = Vec::new();
        for (i, s) in system.surfaces()[..system.image_index()].iter().enumerate() {
            if !matches!(s.profile, Profile::Plano) && !s.is_stop {
                entries.push(Variable::Curvature {
                    surface: i,
                    bounds: None,
                });
            }
        }
        entries.extend(
            system
                .glass_surfaces()
                .into_iter()
                .map(|surface| Variable::Material { surface }),
        );
        VariableSet { entries }
    }

    pub fn validate(&self, system: &LensSystem) -> Result<(), OptimizerError> {
        for v in &self.entries {
            if v.surface() >= system.image_index() {
                return Err(OptimizerError::BadVariable(format!(
                    "surface {} is not an optical surface",
                    v.surface()
                )));
            }
            if let Some((lo, hi)) = v.bounds() {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(OptimizerError::BadVariable(format!(
                        "surface {}: bounds {lo} {hi}",
                        v.surface()
                    )));
                }
            }
            if let Variable::Material { surface } = v {
                if system.surface(*surface).material.is_air() {
                    return Err(OptimizerError::BadVariable(format!(
                        "surface {surface} is followed by air"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn continuous(&self) -> Vec<Variable> {
        self.entries
            .iter()
            .copied()
            .filter(Variable::is_continuous)
            .collect()
    }

    pub fn material_surfaces(&self) -> Vec<usize> {
        self.entries
            .iter()
            .filter_map(|v| match v {
                Variable::Material { surface } => Some(*surface),
                _ => None,
            })
            .collect()
    }
}

pub fn read_values(system: &LensSystem, variables: &[Variable]) -> Vec<f64> {
    variables
        .iter()
        .map(|v| match *v {
            Variable::Curvature { surface, .. } => system.surface(surface).profile.curvature(),
            Variable::Thickness { surface, .. } => system.surface(surface).thickness,
            Variable::Material { .. } => f64::NAN,
        })
        .collect()
}

pub fn clamp(variables: &[Variable], values: &mut [f64]) {
    for (v, x) in variables.iter().zip(values.iter_mut()) {
        if let Some((lo, hi)) = v.bounds() {
            *x = x.clamp(lo, hi);
        }
    }
}

pub fn write_values(system: &mut LensSystem, variables: &[Variable], values: &[f64]) {
    for (v, &x) in variables.iter().zip(values) {
        match *v {
            Variable::Curvature { surface, .. } => system.set_curvature(surface, x),
            Variable::Thickness { surface, .. } => system.set_thickness(surface, x),
            Variable::Material { .. } => {}
        }
    }
}
