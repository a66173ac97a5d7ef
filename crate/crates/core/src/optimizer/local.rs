//! Damped least squares (Levenberg–Marquardt) over continuous variables.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::paraxial::solve_image_plane;
use crate::system::LensSystem;

use super::merit::{merit_value_with, MeritReport, MeritSettings, Operand, PENALTY};
use super::variables::{clamp, read_values, write_values, Variable, VariableSet};
use super::OptimizerError;

const REL_STEP: f64 = 1e-6;
const ABS_STEP: f64 = 1e-9;
const COLUMN_FLOOR: f64 = 1e-14;
const MF_TOLERANCE: f64 = 1e-12;
const DAMPING_CEILING: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSettings {
    pub max_iter: usize,
    /// Re-solve the last gap for paraxial focus after every variable update.
    pub resolve_image: bool,
    pub initial_damping: f64,
    pub merit: MeritSettings,
}

impl Default for LocalSettings {
    fn default() -> Self {
        LocalSettings {
            max_iter: 50,
            resolve_image: true,
            initial_damping: 1e-3,
            merit: MeritSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    Converged,
    DampingOverflow,
    JacobianDegenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOutcome {
    pub system: LensSystem,
    pub report: MeritReport,
    /// Merit value at the start and after every accepted step.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
}

impl LocalOutcome {
    pub fn degenerate(&self) -> bool {
        self.stop == StopReason::JacobianDegenerate
    }
}

/// Applies variable values and, when asked, refocuses.
pub(crate) fn realize(
    base: &LensSystem,
    vars: &[Variable],
    x: &[f64],
    resolve: bool,
) -> LensSystem {
    let mut sys = base.clone();
    write_values(&mut sys, vars, x);
    if resolve {
        if let Ok(s) = solve_image_plane(&sys) {
            return s;
        }
    }
    sys
}

pub fn local_optimize(
    system: &LensSystem,
    operands: &[Operand],
    variables: &VariableSet,
    settings: &LocalSettings,
) -> Result<LocalOutcome, OptimizerError> {
    variables.validate(system)?;
    let vars = variables.continuous();
    if vars.is_empty() {
        return Err(OptimizerError::NoVariables);
    }
    super::merit::validate(operands, system)?;
    let evaluate = |x: &[f64]| -> (LensSystem, MeritReport) {
        let sys = realize(system, &vars, x, settings.resolve_image);
        let report = merit_value_with(&sys, operands, &settings.merit).expect("operands validated");
        (sys, report)
    };

    let mut x = read_values(system, &vars);
    let (mut current, mut report) = evaluate(&x);
    let mut history = vec![report.value];
    let mut damping = settings.initial_damping;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    while iterations < settings.max_iter {
        // no step could lower the merit by more than the tolerance
        if report.value <= MF_TOLERANCE {
            stop = StopReason::Converged;
            break;
        }
        iterations += 1;
        let r0 = DVector::from_vec(report.residuals());
        let columns: Vec<DVector<f64>> = (0..vars.len())
            .into_par_iter()
            .map(|j| {
                let h = (REL_STEP * x[j].abs()).max(ABS_STEP);
                let mut xp = x.clone();
                xp[j] += h;
                let (_, rep) = evaluate(&xp);
                (DVector::from_vec(rep.residuals()) - &r0) / h
            })
            .collect();
        if columns.iter().all(|c| c.norm() < COLUMN_FLOOR) {
            stop = StopReason::JacobianDegenerate;
            if iterations == 1 {
                return Ok(LocalOutcome {
                    system: system.clone(),
                    report,
                    history,
                    iterations,
                    stop,
                });
            }
            break;
        }
        let jac = DMatrix::from_columns(&columns);
        let jtj = jac.transpose() * &jac;
        let gradient = jac.transpose() * &r0;
        let diag_floor = jtj.diagonal().max() * 1e-12;

        let mut accepted = false;
        while damping <= DAMPING_CEILING {
            let mut a = jtj.clone();
            for i in 0..vars.len() {
                a[(i, i)] += damping * jtj[(i, i)].max(diag_floor);
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&gradient)),
                None => match a.lu().solve(&(-&gradient)) {
                    Some(s) => s,
                    None => {
                        damping *= 10.0;
                        continue;
                    }
                },
            };
            let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            clamp(&vars, &mut trial);
            let (sys, rep) = evaluate(&trial);
            if rep.value < report.value && rep.value < PENALTY {
                let delta = report.value - rep.value;
                x = trial;
                current = sys;
                report = rep;
                history.push(report.value);
                damping /= 10.0;
                accepted = true;
                if delta < MF_TOLERANCE {
                    stop = StopReason::Converged;
                }
                break;
            }
            damping *= 10.0;
        }
        if !accepted {
            stop = StopReason::DampingOverflow;
            break;
        }
        if stop == StopReason::Converged {
            break;
        }
    }
    Ok(LocalOutcome {
        system: current,
        report,
        history,
        iterations,
        stop,
    })
}
