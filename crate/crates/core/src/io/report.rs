//! Analysis tables, their plots and the batch report directory.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::aberration::{seidel_table, SeidelTable, NAMES};
use crate::optimizer::HammerRecord;
use crate::paraxial::{system_summary, ParaxialError, ParaxialSummary};
use crate::quality::field::field_curves_distortion;
use crate::quality::opd::opd_fan;
use crate::quality::psf::{polychromatic_mtf, psf_and_strehl, DEFAULT_GRID, DEFAULT_PAD};
use crate::quality::{FieldScan, MtfCurve, OpdFan, Psf, PupilPattern, QualityError, SpotReport};
use crate::system::LensSystem;

use super::svg::{BarChart, Plot, Series};
use super::table::{Cell, Table};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Paraxial(#[from] ParaxialError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One output file's name and contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
}

impl Artifact {
    fn csv(name: &str, table: &Table) -> Self {
        Artifact {
            file_name: format!("{name}.csv"),
            contents: table.to_csv(),
        }
    }

    fn svg(name: &str, contents: String) -> Self {
        Artifact {
            file_name: format!("{name}.svg"),
            contents,
        }
    }

    pub fn is_svg(&self) -> bool {
        self.file_name.ends_with(".svg")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Spot,
    Mtf,
    Psf,
    Opd,
    Field,
    Seidel,
}

impl Analysis {
    pub const ALL: [Analysis; 6] = [
        Analysis::Spot,
        Analysis::Mtf,
        Analysis::Psf,
        Analysis::Opd,
        Analysis::Field,
        Analysis::Seidel,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportSettings {
    pub spot_pattern: PupilPattern,
    pub psf_grid: usize,
    pub psf_pad: usize,
    pub opd_samples: usize,
    pub field_samples: usize,
}

impl Default for ReportSettings {
    fn default() -> Self {
        ReportSettings {
            spot_pattern: PupilPattern::default(),
            psf_grid: DEFAULT_GRID,
            psf_pad: DEFAULT_PAD,
            opd_samples: 41,
            field_samples: 21,
        }
    }
}

pub fn summary_table(summary: &ParaxialSummary, system: &LensSystem) -> Table {
    let mut t = Table::new(["quantity", "value", "unit"]);
    let mut row = |q: &str, v: Cell, u: &str| t.push(vec![q.into(), v, u.into()]);
    row("effective_focal_length", summary.effl.into(), "mm");
    row("back_focal_length", summary.bfl.into(), "mm");
    row("total_track", summary.totr.into(), "mm");
    row("f_number", summary.fno.into(), "");
    row(
        "entrance_pupil_position",
        summary.entrance_pupil_position.into(),
        "mm",
    );
    row(
        "entrance_pupil_diameter",
        summary.entrance_pupil_diameter.into(),
        "mm",
    );
    row("exit_pupil_z", summary.exit_pupil_z.into(), "mm");
    row(
        "primary_wavelength",
        system.primary_wavelength().into(),
        "um",
    );
    for (f, h) in system.fields().iter().zip(&summary.image_heights) {
        row(&format!("paraxial_image_height_{f}deg"), (*h).into(), "mm");
    }
    t
}

pub fn spot_table(report: &SpotReport) -> Table {
    let mut t = Table::new([
        "field_deg",
        "wavelength_um",
        "rms_radius_um",
        "geo_radius_um",
        "image_height_mm",
        "centroid_x_mm",
        "centroid_y_mm",
        "rays",
        "lost",
        "airy_radius_um",
    ]);
    for s in &report.spots {
        t.push(vec![
            s.field_deg.into(),
            s.wavelength.into(),
            s.rms_radius.into(),
            s.geo_radius.into(),
            s.image_height.into(),
            s.centroid.0.into(),
            s.centroid.1.into(),
            s.hits.len().into(),
            s.lost.into(),
            report.airy_radius.into(),
        ]);
    }
    t
}

/// Ray intercepts relative to each spot's chief ray, µm.
pub fn spot_points_table(report: &SpotReport) -> Table {
    let mut t = Table::new(["field_deg", "wavelength_um", "x_um", "y_um"]);
    for s in &report.spots {
        for &(x, y) in &s.hits {
            t.push(vec![
                s.field_deg.into(),
                s.wavelength.into(),
                (1e3 * (x - s.chief.0)).into(),
                (1e3 * (y - s.chief.1)).into(),
            ]);
        }
    }
    t
}

/// Frequencies in the first column, then tangential/sagittal pairs per field.
pub fn mtf_table(curves: &[(f64, MtfCurve)]) -> Table {
    let mut header = vec!["frequency_cpmm".to_string()];
    for (f, _) in curves {
        header.push(format!("tangential_{f}deg"));
        header.push(format!("sagittal_{f}deg"));
    }
    let mut t = Table::new(header);
    let Some((_, first)) = curves.first() else {
        return t;
    };
    for (k, &nu) in first.frequencies.iter().enumerate() {
        let mut row = vec![Cell::from(nu)];
        for (_, c) in curves {
            row.push(c.tangential.get(k).copied().into());
            row.push(c.sagittal.get(k).copied().into());
        }
        t.push(row);
    }
    t
}

pub fn opd_table(fan: &OpdFan) -> Table {
    let mut t = Table::new(["field_deg", "arm", "pupil", "opd_waves"]);
    for f in &fan.fields {
        for (arm, samples) in [("tangential", &f.tangential), ("sagittal", &f.sagittal)] {
            for &(p, v) in samples {
                t.push(vec![f.field_deg.into(), arm.into(), p.into(), v.into()]);
            }
        }
    }
    t
}

pub fn field_table(scan: &FieldScan) -> Table {
    let mut t = Table::new([
        "field_deg",
        "tangential_focus_mm",
        "sagittal_focus_mm",
        "distortion_percent",
        "real_height_mm",
        "paraxial_height_mm",
    ]);
    for s in &scan.samples {
        t.push(vec![
            s.field_deg.into(),
            s.tangential_shift.into(),
            s.sagittal_shift.into(),
            s.distortion_percent.into(),
            s.real_height.into(),
            s.paraxial_height.into(),
        ]);
    }
    t
}

/// Per-surface coefficients in waves at the primary wavelength plus a SUM row.
pub fn seidel_csv_table(table: &SeidelTable) -> Table {
    let mut t = Table::new(std::iter::once("surface").chain(NAMES));
    for (i, row) in table.rows.iter().enumerate() {
        let mut cells = vec![Cell::from(row.surface)];
        cells.extend(table.row_waves(i).into_iter().map(Cell::from));
        t.push(cells);
    }
    let mut cells = vec![Cell::from("SUM")];
    cells.extend(table.sum_waves().into_iter().map(Cell::from));
    t.push(cells);
    t
}

/// Horizontal and vertical cuts through the PSF peak.
pub fn psf_table(psf: &Psf) -> Table {
    let mut t = Table::new(["offset_um", "x_cut", "y_cut"]);
    let c = psf.size / 2;
    for k in 0..psf.size {
        let offset = (k as f64 - c as f64) * psf.pitch * 1e3;
        t.push(vec![
            offset.into(),
            psf.at(c, k).into(),
            psf.at(k, c).into(),
        ]);
    }
    t
}

pub fn history_table(history: &[HammerRecord]) -> Table {
    let mut t = Table::new(["iteration", "move", "mf", "best_mf", "flagged"]);
    for h in history {
        t.push(vec![
            h.iteration.into(),
            h.action.as_str().into(),
            h.merit.into(),
            h.best.into(),
            (if h.flagged { "yes" } else { "no" }).into(),
        ]);
    }
    t
}

fn pairs(table: &Table, x: usize, y: usize) -> Vec<(f64, f64)> {
    table
        .column(x)
        .into_iter()
        .zip(table.column(y))
        .filter_map(|(a, b)| Some((a?, b?)))
        .collect()
}

/// Groups rows by a key column, preserving first-appearance order.
fn grouped(table: &Table, key: usize, filter: impl Fn(&[Cell]) -> bool) -> Vec<(f64, Table)> {
    let mut groups: Vec<(f64, Table)> = Vec::new();
    for row in table.rows.iter().filter(|r| filter(r)) {
        let Some(k) = row[key].number() else { continue };
        let slot = match groups.iter().position(|(g, _)| *g == k) {
            Some(i) => i,
            None => {
                groups.push((k, Table::new(table.header.clone())));
                groups.len() - 1
            }
        };
        groups[slot].1.push(row.clone());
    }
    groups
}

pub fn mtf_plot(table: &Table) -> String {
    let series = (1..table.header.len())
        .map(|c| Series::line(table.header[c].replace('_', " "), pairs(table, 0, c)))
        .collect();
    Plot {
        title: "Polychromatic MTF".into(),
        x_label: "spatial frequency (cycles/mm)".into(),
        y_label: "modulation".into(),
        series,
        square: false,
    }
    .to_svg()
}

pub fn spot_plot(points: &Table, primary_wavelength: f64) -> String {
    let series = grouped(points, 0, |r| r[1].number() == Some(primary_wavelength))
        .into_iter()
        .map(|(f, t)| Series::markers(format!("{f} deg"), pairs(&t, 2, 3)))
        .collect();
    Plot {
        title: "Spot diagram (relative to chief ray)".into(),
        x_label: "x (µm)".into(),
        y_label: "y (µm)".into(),
        series,
        square: true,
    }
    .to_svg()
}

pub fn opd_plot(table: &Table) -> String {
    let mut series = Vec::new();
    for arm in ["tangential", "sagittal"] {
        for (f, t) in grouped(table, 0, |r| r[1] == Cell::from(arm)) {
            series.push(Series::line(format!("{arm} {f} deg"), pairs(&t, 2, 3)));
        }
    }
    Plot {
        title: "Optical path difference".into(),
        x_label: "normalized pupil coordinate".into(),
        y_label: "OPD (waves)".into(),
        series,
        square: false,
    }
    .to_svg()
}

pub fn field_plot(table: &Table) -> String {
    let swap = |v: Vec<(f64, f64)>| v.into_iter().map(|(a, b)| (b, a)).collect();
    Plot {
        title: "Field curvature".into(),
        x_label: "focus shift (mm)".into(),
        y_label: "field (deg)".into(),
        series: vec![
            Series::line("tangential", swap(pairs(table, 0, 1))),
            Series::line("sagittal", swap(pairs(table, 0, 2))),
        ],
        square: false,
    }
    .to_svg()
}

pub fn distortion_plot(table: &Table) -> String {
    Plot {
        title: "Distortion".into(),
        x_label: "distortion (%)".into(),
        y_label: "field (deg)".into(),
        series: vec![Series::line(
            "distortion",
            pairs(table, 0, 3)
                .into_iter()
                .map(|(a, b)| (b, a))
                .collect(),
        )],
        square: false,
    }
    .to_svg()
}

pub fn seidel_plot(table: &Table) -> String {
    BarChart {
        title: "Seidel coefficients".into(),
        y_label: "waves".into(),
        categories: table
            .rows
            .iter()
            .map(|r| match &r[0] {
                Cell::Number(v) => format!("{v}"),
                Cell::Text(s) => s.clone(),
                Cell::Empty => String::new(),
            })
            .collect(),
        segment_names: table.header[1..].to_vec(),
        values: table
            .rows
            .iter()
            .map(|r| r[1..].iter().map(|c| c.number().unwrap_or(0.0)).collect())
            .collect(),
    }
    .to_svg()
}

pub fn psf_plot(table: &Table) -> String {
    Plot {
        title: "PSF cuts through the peak".into(),
        x_label: "offset (µm)".into(),
        y_label: "relative irradiance".into(),
        series: vec![
            Series::line("x", pairs(table, 0, 1)),
            Series::line("y", pairs(table, 0, 2)),
        ],
        square: false,
    }
    .to_svg()
}

pub fn history_plot(table: &Table) -> String {
    let log = |v: Vec<(f64, f64)>| {
        v.into_iter()
            .map(|(a, b)| (a, b.max(1e-300).log10()))
            .collect()
    };
    Plot {
        title: "Optimization history".into(),
        x_label: "iteration".into(),
        y_label: "log10 merit".into(),
        series: vec![
            Series::markers("candidate", log(pairs(table, 0, 2))),
            Series::line("best", log(pairs(table, 0, 3))),
        ],
        square: false,
    }
    .to_svg()
}

/// CSV and SVG artifacts of one analysis.
pub fn analysis_artifacts(
    system: &LensSystem,
    analysis: Analysis,
    settings: &ReportSettings,
) -> Result<Vec<Artifact>, ReportError> {
    Ok(match analysis {
        Analysis::Spot => {
            let report = crate::quality::spot_diagram(system, settings.spot_pattern)?;
            let points = spot_points_table(&report);
            vec![
                Artifact::csv("spot", &spot_table(&report)),
                Artifact::csv("spot_points", &points),
                Artifact::svg("spot", spot_plot(&points, system.primary_wavelength())),
            ]
        }
        Analysis::Mtf => {
            let curves = system
                .fields()
                .iter()
                .map(|&f| {
                    polychromatic_mtf(system, f, settings.psf_grid, settings.psf_pad)
                        .map(|c| (f, c))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let table = mtf_table(&curves);
            vec![
                Artifact::csv("mtf", &table),
                Artifact::svg("mtf", mtf_plot(&table)),
            ]
        }
        Analysis::Psf => {
            let psf = psf_and_strehl(system, 0.0, settings.psf_grid, settings.psf_pad)?;
            let table = psf_table(&psf);
            let mut strehl = Table::new(["field_deg", "strehl"]);
            for &f in system.fields() {
                let value = if f == 0.0 {
                    psf.strehl
                } else {
                    psf_and_strehl(system, f, settings.psf_grid, settings.psf_pad)?.strehl
                };
                strehl.push(vec![f.into(), value.into()]);
            }
            vec![
                Artifact::csv("psf", &table),
                Artifact::csv("strehl", &strehl),
                Artifact::svg("psf", psf_plot(&table)),
            ]
        }
        Analysis::Opd => {
            let table = opd_table(&opd_fan(system, settings.opd_samples)?);
            vec![
                Artifact::csv("opd", &table),
                Artifact::svg("opd", opd_plot(&table)),
            ]
        }
        Analysis::Field => {
            let table = field_table(&field_curves_distortion(system, settings.field_samples)?);
            vec![
                Artifact::csv("field", &table),
                Artifact::svg("field", field_plot(&table)),
                Artifact::svg("distortion", distortion_plot(&table)),
            ]
        }
        Analysis::Seidel => {
            let table = seidel_csv_table(&seidel_table(system)?);
            vec![
                Artifact::csv("seidel", &table),
                Artifact::svg("seidel", seidel_plot(&table)),
            ]
        }
    })
}

pub fn report_artifacts(
    system: &LensSystem,
    settings: &ReportSettings,
) -> Result<Vec<Artifact>, ReportError> {
    let summary = system_summary(system)?;
    let mut out = vec![Artifact::csv("summary", &summary_table(&summary, system))];
    for analysis in Analysis::ALL {
        out.extend(analysis_artifacts(system, analysis, settings)?);
    }
    Ok(out)
}

pub fn write_artifacts(
    artifacts: &[Artifact],
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, ReportError> {
    let dir = dir.as_ref();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.file_name);
            std::fs::write(&path, &a.contents).map_err(io(&path))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glass::Material;
    use crate::paraxial::solve_image_plane;
    use crate::system::SurfaceNode;

    fn singlet() -> LensSystem {
        let sys = LensSystem::monochromatic(
            vec![
                SurfaceNode::plano(2.0, Material::air()).stop(),
                SurfaceNode::sphere(60.0, 3.0, Material::constant("G", 1.5)),
                SurfaceNode::plano(110.0, Material::air()),
                SurfaceNode::image(),
            ],
            2.0,
            vec![0.0, 0.5],
            0.58756,
        )
        .unwrap();
        solve_image_plane(&sys).unwrap()
    }

    #[test]
    fn report_contains_every_analysis() {
        let artifacts = report_artifacts(&singlet(), &ReportSettings::default()).unwrap();
        let names: Vec<&str> = artifacts.iter().map(|a| a.file_name.as_str()).collect();
        for want in [
            "summary.csv",
            "spot.csv",
            "mtf.csv",
            "mtf.svg",
            "opd.csv",
            "seidel.csv",
            "field.csv",
            "psf.csv",
        ] {
            assert!(names.contains(&want), "{want} missing from {names:?}");
        }
        for a in &artifacts {
            if a.is_svg() {
                assert!(a.contents.contains("</svg>"));
            } else {
                assert!(a.contents.lines().count() >= 2, "{}", a.file_name);
            }
        }
    }

    #[test]
    fn seidel_csv_ends_with_sum_row() {
        let table = seidel_csv_table(&seidel_table(&singlet()).unwrap());
        assert_eq!(table.rows.len(), 4);
        assert_eq!(table.rows[3][0], Cell::from("SUM"));
        for k in 1..6 {
            let total: f64 = table.rows[..3].iter().map(|r| r[k].number().unwrap()).sum();
            assert!((total - table.rows[3][k].number().unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn plots_are_views_of_the_table() {
        let mut t = Table::new(["frequency_cpmm", "tangential_0deg", "sagittal_0deg"]);
        t.push(vec![0.0.into(), 1.0.into(), 1.0.into()]);
        t.push(vec![50.0.into(), 0.5.into(), 0.6.into()]);
        let svg = mtf_plot(&t);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg, mtf_plot(&t.clone()));
    }
}
