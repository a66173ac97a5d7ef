//! Line-oriented lens prescription format.
//!
//! ```text
//! # comment
//! WAVELENGTHS 0.48613 1 0.58756 1 0.65627 1   # value/weight pairs, µm
//! PRIMARY 1                                     # 0-based
//! FIELDS 0 0.6 1.2                              # degrees
//! EPD 3
//! OBJECT 250                                    # optional, mm before surface 0
//! SURFACES
//! STOP PLANO inf  1.0  AIR  -    1.6
//! SURF SPH   12.5 2.0  LAK8 -    2.5
//! SURF CONIC -40  8.0  AIR  -1.2 2.5
//! IMG  PLANO inf  0    AIR  -    -
//! ```
//!
//! Surface rows: tag, profile, radius, thickness, material, conic,
//! semi-diameter. `-` leaves the conic or semi-diameter unset.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::glass::GlassCatalog;
use crate::numfmt::sig17;
use crate::system::{LensSystem, Profile, SurfaceNode, SystemError, Wavelength};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LensFileError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: unknown material `{name}`")]
    UnknownMaterial { line: usize, name: String },
    #[error("no surface is tagged STOP")]
    NoStopSurface,
    #[error("more than one surface is tagged STOP")]
    MultipleStops,
    #[error("invalid system: {0}")]
    System(SystemError),
    #[error("{0}")]
    Io(String),
}

impl From<SystemError> for LensFileError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::NoStopSurface => LensFileError::NoStopSurface,
            SystemError::MultipleStops => LensFileError::MultipleStops,
            other => LensFileError::System(other),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> LensFileError {
    LensFileError::ParseError {
        line,
        message: message.into(),
    }
}

fn number(line: usize, token: &str) -> Result<f64, LensFileError> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line, format!("`{token}` is not a finite number"))),
    }
}

fn optional(line: usize, token: &str) -> Result<Option<f64>, LensFileError> {
    if token == "-" {
        Ok(None)
    } else {
        number(line, token).map(Some)
    }
}

pub fn parse_lens(text: &str, catalog: &GlassCatalog) -> Result<LensSystem, LensFileError> {
    let mut wavelengths = None;
    let mut primary = None;
    let mut fields = None;
    let mut epd = None;
    let mut object = None;
    let mut surfaces = Vec::new();
    let mut in_table = false;
    let mut image_seen = false;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let key = tokens[0].to_ascii_uppercase();
        if !in_table {
            let values = &tokens[1..];
            match key.as_str() {
                "WAVELENGTHS" => {
                    if values.is_empty() || !values.len().is_multiple_of(2) {
                        return Err(parse_err(
                            line,
                            "WAVELENGTHS expects wavelength/weight pairs",
                        ));
                    }
                    let mut list = Vec::new();
                    for pair in values.chunks(2) {
                        list.push(Wavelength {
                            micrometres: number(line, pair[0])?,
                            weight: number(line, pair[1])?,
                        });
                    }
                    wavelengths = Some(list);
                }
                "PRIMARY" => {
                    let [v] = values else {
                        return Err(parse_err(line, "PRIMARY expects one index"));
                    };
                    primary = Some(
                        v.parse::<usize>()
                            .map_err(|_| parse_err(line, format!("bad index `{v}`")))?,
                    );
                }
                "FIELDS" => {
                    fields = Some(
                        values
                            .iter()
                            .map(|t| number(line, t))
                            .collect::<Result<Vec<_>, _>>()?,
                    );
                }
                "EPD" => {
                    let [v] = values else {
                        return Err(parse_err(line, "EPD expects one value"));
                    };
                    epd = Some(number(line, v)?);
                }
                "OBJECT" => {
                    let [v] = values else {
                        return Err(parse_err(line, "OBJECT expects one value"));
                    };
                    object = Some(number(line, v)?);
                }
                "SURFACES" => in_table = true,
                other => return Err(parse_err(line, format!("unknown keyword `{other}`"))),
            }
            continue;
        }
        if image_seen {
            return Err(parse_err(line, "rows after the IMG surface"));
        }
        if tokens.len() != 7 {
            return Err(parse_err(
                line,
                format!("surface rows have 7 fields, found {}", tokens.len()),
            ));
        }
        let radius = if tokens[2].eq_ignore_ascii_case("inf")
            || tokens[2].eq_ignore_ascii_case("infinity")
        {
            None
        } else {
            Some(number(line, tokens[2])?)
        };
        let conic = optional(line, tokens[5])?;
        let profile = match (tokens[1].to_ascii_uppercase().as_str(), radius, conic) {
            ("PLANO", None, None) => Profile::Plano,
            ("SPH", Some(r), None) => Profile::Sphere { radius: r },
            ("CONIC", Some(r), Some(k)) => Profile::Conic {
                radius: r,
                conic: k,
            },
            (p, _, _) => {
                return Err(parse_err(
                    line,
                    format!("profile `{p}` does not match its radius/conic fields"),
                ))
            }
        };
        let thickness = number(line, tokens[3])?;
        let material =
            catalog
                .resolve(tokens[4])
                .ok_or_else(|| LensFileError::UnknownMaterial {
                    line,
                    name: tokens[4].to_string(),
                })?;
        let mut node = SurfaceNode::new(profile, thickness, material);
        node.semi_diameter = optional(line, tokens[6])?;
        match key.as_str() {
            "SURF" => {}
            "STOP" => node.is_stop = true,
            "IMG" => image_seen = true,
            other => return Err(parse_err(line, format!("unknown surface tag `{other}`"))),
        }
        surfaces.push(node);
    }
    let missing = |what: &str| parse_err(text.lines().count().max(1), format!("missing {what}"));
    if !image_seen {
        return Err(missing("IMG surface"));
    }
    let system = LensSystem::new(
        surfaces,
        epd.ok_or_else(|| missing("EPD"))?,
        fields.ok_or_else(|| missing("FIELDS"))?,
        wavelengths.ok_or_else(|| missing("WAVELENGTHS"))?,
        primary.unwrap_or(0),
    )?;
    Ok(system.with_object_distance(object)?)
}

pub fn read_lens(
    path: impl AsRef<Path>,
    catalog: &GlassCatalog,
) -> Result<LensSystem, LensFileError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| LensFileError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_lens(&text, catalog)
}

/// Canonical text form; identical systems give identical bytes.
pub fn lens_to_text(system: &LensSystem) -> String {
    let mut out = String::new();
    out.push_str("WAVELENGTHS");
    for w in system.wavelengths() {
        let _ = write!(out, " {} {}", sig17(w.micrometres), sig17(w.weight));
    }
    let _ = writeln!(out, "\nPRIMARY {}", system.primary_index());
    out.push_str("FIELDS");
    for f in system.fields() {
        let _ = write!(out, " {}", sig17(*f));
    }
    let _ = writeln!(out, "\nEPD {}", sig17(system.epd()));
    if let Some(d) = system.object_distance() {
        let _ = writeln!(out, "OBJECT {}", sig17(d));
    }
    out.push_str("SURFACES\n");
    let image = system.image_index();
    for (i, s) in system.surfaces().iter().enumerate() {
        let tag = if i == image {
            "IMG"
        } else if s.is_stop {
            "STOP"
        } else {
            "SURF"
        };
        let (profile, radius, conic) = match s.profile {
            Profile::Plano => ("PLANO", "inf".to_string(), "-".to_string()),
            Profile::Sphere { radius } => ("SPH", sig17(radius), "-".to_string()),
            Profile::Conic { radius, conic } => ("CONIC", sig17(radius), sig17(conic)),
        };
        let sd = s.semi_diameter.map_or("-".to_string(), sig17);
        let _ = writeln!(
            out,
            "{tag} {profile} {radius} {} {} {conic} {sd}",
            sig17(s.thickness),
            s.material.name
        );
    }
    out
}

pub fn write_lens(system: &LensSystem, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, lens_to_text(system))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# demo
WAVELENGTHS 0.48613 1 0.58756 2 0.65627 1
PRIMARY 1
FIELDS 0 0.6 1.2
EPD 3
SURFACES
STOP PLANO inf 0.5 AIR - 1.6
SURF SPH 12.5 2.0 LAK8 - 2.5
SURF CONIC -40 8.0 AIR -1.2 2.5
IMG PLANO inf 0 AIR - -
";

    #[test]
    fn parses_sample() {
        let sys = parse_lens(SAMPLE, &GlassCatalog::shipped()).unwrap();
        assert_eq!(sys.len(), 4);
        assert_eq!(sys.stop_index(), 0);
        assert_eq!(sys.primary_wavelength(), 0.58756);
        assert_eq!(sys.surface(0).profile, Profile::Plano);
        assert_eq!(
            sys.surface(2).profile,
            Profile::Conic {
                radius: -40.0,
                conic: -1.2
            }
        );
        assert_eq!(sys.surface(1).material.name, "LAK8");
        assert_eq!(sys.surface(3).semi_diameter, None);
    }

    #[test]
    fn round_trip_is_identity_and_canonical() {
        let catalog = GlassCatalog::shipped();
        let sys = parse_lens(SAMPLE, &catalog)
            .unwrap()
            .with_object_distance(Some(123.25))
            .unwrap();
        let text = lens_to_text(&sys);
        let again = parse_lens(&text, &catalog).unwrap();
        assert_eq!(again, sys);
        assert_eq!(lens_to_text(&again), text);
    }

    #[test]
    fn errors() {
        let catalog = GlassCatalog::shipped();
        let unknown = SAMPLE.replace("LAK8", "UNOBTAINIUM");
        assert!(matches!(
            parse_lens(&unknown, &catalog),
            Err(LensFileError::UnknownMaterial { line: 8, .. })
        ));
        let no_stop = SAMPLE.replace("STOP PLANO", "SURF PLANO");
        assert_eq!(
            parse_lens(&no_stop, &catalog),
            Err(LensFileError::NoStopSurface)
        );
        let two_stops = SAMPLE.replace("SURF SPH", "STOP SPH");
        assert_eq!(
            parse_lens(&two_stops, &catalog),
            Err(LensFileError::MultipleStops)
        );
        let bad_number = SAMPLE.replace("12.5", "twelve");
        assert!(matches!(
            parse_lens(&bad_number, &catalog),
            Err(LensFileError::ParseError { line: 8, .. })
        ));
        let mismatched = SAMPLE.replace("SPH 12.5", "PLANO 12.5");
        assert!(matches!(
            parse_lens(&mismatched, &catalog),
            Err(LensFileError::ParseError { line: 8, .. })
        ));
        let no_image = SAMPLE.replace("IMG PLANO inf 0 AIR - -\n", "");
        assert!(matches!(
            parse_lens(&no_image, &catalog),
            Err(LensFileError::ParseError { .. })
        ));
    }

    #[test]
    fn inf_radius_is_plano() {
        let text = SAMPLE.replace(
            "SURF SPH 12.5 2.0 LAK8 - 2.5",
            "SURF PLANO inf 2.0 LAK8 - 2.5",
        );
        let sys = parse_lens(&text, &GlassCatalog::shipped()).unwrap();
        assert_eq!(sys.surface(1).profile, Profile::Plano);
    }
}
