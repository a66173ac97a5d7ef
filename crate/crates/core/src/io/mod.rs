//! File formats and emitters: lens prescriptions, merit and variable
//! definitions, CSV tables, SVG plots and PGM images.

pub mod definitions;
pub mod lensfile;
pub mod pgm;
pub mod report;
pub mod svg;
pub mod table;

pub use definitions::{
    merit_to_text, parse_merit, parse_variables, read_merit, read_variables, variables_to_text,
    DefinitionError,
};
pub use lensfile::{lens_to_text, parse_lens, read_lens, write_lens, LensFileError};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};
pub use report::{
    analysis_artifacts, report_artifacts, write_artifacts, Analysis, Artifact, ReportError,
    ReportSettings,
};
pub use table::{Cell, Table};
