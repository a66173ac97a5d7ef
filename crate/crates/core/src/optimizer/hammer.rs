//! Global search alternating catalog glass substitution with local
//! re-optimization, plus periodic random curvature restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::glass::{GlassCatalog, LINE_D};
use crate::system::{LensSystem, Profile};

use super::local::{local_optimize, LocalSettings, StopReason};
use super::merit::{merit_value_with, MeritReport, Operand};
use super::variables::VariableSet;
use super::OptimizerError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HammerSettings {
    /// Outer iterations.
    pub budget: usize,
    pub seed: u64,
    /// Catalog neighbours tried per substitution.
    pub neighbours: usize,
    /// Every this many iterations a restart replaces the substitution (0 disables).
    pub restart_every: usize,
    /// Half-width of the relative curvature perturbation.
    pub perturbation: f64,
    pub local: LocalSettings,
}

impl Default for HammerSettings {
    fn default() -> Self {
        HammerSettings {
            budget: 20,
            seed: 0,
            neighbours: 5,
            restart_every: 4,
            perturbation: 0.02,
            local: LocalSettings {
                max_iter: 15,
                ..LocalSettings::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HammerRecord {
    pub iteration: usize,
    /// Human-readable move, e.g. `substitute 3 F7` or `restart`.
    pub action: String,
    /// Best merit value produced by this iteration's candidates.
    pub merit: f64,
    /// Incumbent after the iteration.
    pub best: f64,
    /// Local optimization ended on a degenerate Jacobian or a penalty.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HammerOutcome {
    pub system: LensSystem,
    pub report: MeritReport,
    pub start: f64,
    pub history: Vec<HammerRecord>,
}

struct Candidate {
    system: LensSystem,
    report: MeritReport,
    flagged: bool,
}

fn refine(
    system: LensSystem,
    operands: &[Operand],
    continuous: &VariableSet,
    settings: &LocalSettings,
) -> Result<Candidate, OptimizerError> {
    if continuous.entries.is_empty() {
        let report = merit_value_with(&system, operands, &settings.merit)?;
        let flagged = report.failed;
        return Ok(Candidate {
            system,
            report,
            flagged,
        });
    }
    let out = local_optimize(&system, operands, continuous, settings)?;
    let flagged = out.stop == StopReason::JacobianDegenerate || out.report.failed;
    Ok(Candidate {
        system: out.system,
        report: out.report,
        flagged,
    })
}

pub fn hammer_optimize(
    system: &LensSystem,
    operands: &[Operand],
    variables: &VariableSet,
    catalog: &GlassCatalog,
    settings: &HammerSettings,
) -> Result<HammerOutcome, OptimizerError> {
    variables.validate(system)?;
    let continuous = VariableSet::new(variables.continuous());
    let mut glass_surfaces = variables.material_surfaces();
    if glass_surfaces.is_empty() {
        glass_surfaces = system.glass_surfaces();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    let start = merit_value_with(system, operands, &settings.local.merit)?;
    let mut best = Candidate {
        system: system.clone(),
        report: start.clone(),
        flagged: start.failed,
    };
    let mut history = Vec::with_capacity(settings.budget);
    let mut turn = 0usize;

    for iteration in 1..=settings.budget {
        let restart = catalog.is_empty()
            || glass_surfaces.is_empty()
            || (settings.restart_every > 0 && iteration % settings.restart_every == 0);
        let (action, candidate) = if restart {
            let mut sys = best.system.clone();
            for i in 0..sys.image_index() {
                let profile = &sys.surface(i).profile;
                if matches!(profile, Profile::Plano) {
                    continue;
                }
                let factor = 1.0 + rng.gen_range(-settings.perturbation..=settings.perturbation);
                let c = profile.curvature() * factor;
                sys.set_curvature(i, c);
            }
            (
                "restart".to_string(),
                refine(sys, operands, &continuous, &settings.local)?,
            )
        } else {
            let surface = glass_surfaces[turn % glass_surfaces.len()];
            turn += 1;
            let current = &best.system.surface(surface).material;
            let nd = current.refractive_index(LINE_D)?;
            let vd = current.abbe_number().unwrap_or(50.0);
            let options = catalog.nearest(nd, vd, settings.neighbours);
            let trials = options
                .par_iter()
                .map(|&g| {
                    let mut sys = best.system.clone();
                    sys.set_material(surface, catalog.entries()[g].clone());
                    refine(sys, operands, &continuous, &settings.local).map(|c| (g, c))
                })
                .collect::<Result<Vec<_>, _>>()?;
            // lowest merit wins, ties to the lowest catalog index
            let Some((g, winner)) = trials.into_iter().min_by(|a, b| {
                a.1.report
                    .value
                    .total_cmp(&b.1.report.value)
                    .then(a.0.cmp(&b.0))
            }) else {
                continue;
            };
            (
                format!("substitute {surface} {}", catalog.entries()[g].name),
                winner,
            )
        };
        let merit = candidate.report.value;
        let flagged = candidate.flagged;
        if merit < best.report.value {
            best = candidate;
        }
        log::debug!(
            "hammer {iteration}: {action} -> {merit:.6e} (best {:.6e})",
            best.report.value
        );
        history.push(HammerRecord {
            iteration,
            action,
            merit,
            best: best.report.value,
            flagged,
        });
    }
    Ok(HammerOutcome {
        system: best.system,
        report: best.report,
        start: start.value,
        history,
    })
}
