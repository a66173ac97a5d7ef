use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{DispersionModel, GlassError, Material, AIR, LINE_D};
use crate::numfmt::sig17;

/// Catalog text shipped with the crate: the ten relay glasses plus common
/// SCHOTT references (N-BK7 and friends).
pub const DEFAULT_CATALOG: &str = include_str!("../../data/default.glass");
/// Catalog holding exactly the ten relay design glasses.
pub const RELAY_CATALOG: &str = include_str!("../../data/relay10.glass");

/// Ordered, case-insensitive collection of materials.
///
/// Entry order is the file order; it is the tie-break order used by the
/// glass-substitution search.
#[derive(Debug, Clone, Default)]
pub struct GlassCatalog {
    entries: Vec<Material>,
    /// `(n_d, V_d)`; `None` for non-dispersive entries.
    nd_vd: Vec<Option<(f64, f64)>>,
    index: HashMap<String, usize>,
}

impl GlassCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn shipped() -> Self {
        Self::parse(DEFAULT_CATALOG).expect("shipped catalog is valid")
    }

    pub fn relay_glasses() -> Self {
        Self::parse(RELAY_CATALOG).expect("relay catalog is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GlassError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| GlassError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// Adds a material; `line` is only used for error reporting.
    pub fn insert(&mut self, material: Material, line: usize) -> Result<(), GlassError> {
        let key = material.name.to_ascii_uppercase();
        if key == AIR {
            return Err(GlassError::ParseError {
                line,
                message: "AIR is reserved".into(),
            });
        }
        if self.index.contains_key(&key) {
            return Err(GlassError::DuplicateGlass {
                line,
                name: material.name,
            });
        }
        // pre-validate at the d line
        material
            .refractive_index(LINE_D)
            .map_err(|e| GlassError::ParseError {
                line,
                message: e.to_string(),
            })?;
        let nd_vd = material
            .abbe_number()
            .ok()
            .map(|vd| (material.refractive_index(LINE_D).unwrap(), vd));
        self.index.insert(key, self.entries.len());
        self.entries.push(material);
        self.nd_vd.push(nd_vd);
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, GlassError> {
        let mut catalog = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.len() != 10 {
                return Err(GlassError::ParseError {
                    line,
                    message: format!("expected 10 fields, found {}", tokens.len()),
                });
            }
            let number = |t: &str| -> Result<f64, GlassError> {
                t.parse::<f64>().map_err(|_| GlassError::ParseError {
                    line,
                    message: format!("`{t}` is not a number"),
                })
            };
            let mut k = [0.0; 6];
            for (slot, tok) in k.iter_mut().zip(&tokens[2..8]) {
                *slot = number(tok)?;
            }
            let model = DispersionModel::from_coefficients(tokens[1], k).ok_or_else(|| {
                GlassError::UnknownDispersionModel {
                    line,
                    model: tokens[1].to_string(),
                }
            })?;
            let range = (number(tokens[8])?, number(tokens[9])?);
            if !(range.0 < range.1) {
                return Err(GlassError::ParseError {
                    line,
                    message: "empty wavelength range".into(),
                });
            }
            catalog.insert(Material::new(tokens[0], model, range), line)?;
        }
        Ok(catalog)
    }

    /// Canonical text form; every number carries 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# name model c1 c2 c3 c4 c5 c6 lambda_min lambda_max\n");
        for m in &self.entries {
            let _ = write!(out, "{} {}", m.name, m.model.keyword());
            for c in m.model.coefficients() {
                let _ = write!(out, " {}", sig17(c));
            }
            let _ = writeln!(
                out,
                " {} {}",
                sig17(m.valid_range.0),
                sig17(m.valid_range.1)
            );
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_text())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Material] {
        &self.entries
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(&name.to_ascii_uppercase()).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Material> {
        self.position(name).map(|i| &self.entries[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.position(name).is_some()
    }

    /// Resolves a material name; `AIR` always resolves.
    pub fn resolve(&self, name: &str) -> Option<Material> {
        if name.eq_ignore_ascii_case(AIR) {
            return Some(Material::air());
        }
        self.get(name).cloned()
    }

    pub fn nd_vd(&self, i: usize) -> Option<(f64, f64)> {
        self.nd_vd[i]
    }

    /// Indices of the `k` entries closest to `(nd, vd)` on the glass map.
    ///
    /// Distances are Euclidean after dividing each axis by the catalog's span
    /// on that axis. Ties go to the lower catalog index; entries without an
    /// Abbe number are skipped.
    pub fn nearest(&self, nd: f64, vd: f64, k: usize) -> Vec<usize> {
        let points: Vec<(usize, (f64, f64))> = self
            .nd_vd
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (i, p)))
            .collect();
        if points.is_empty() {
            return Vec::new();
        }
        let span = |f: fn(&(f64, f64)) -> f64| {
            let (lo, hi) = points
                .iter()
                .map(|(_, p)| f(p))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                    (a.min(v), b.max(v))
                });
            if hi - lo > 0.0 {
                hi - lo
            } else {
                1.0
            }
        };
        let sn = span(|p| p.0);
        let sv = span(|p| p.1);
        let mut scored: Vec<(f64, usize)> = points
            .iter()
            .map(|&(i, (n, v))| (((n - nd) / sn).hypot((v - vd) / sv), i))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        scored.into_iter().take(k).map(|(_, i)| i).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glass::{LINE_C, LINE_F};

    const FIG1: [&str; 10] = [
        "LAK8", "LAK11", "KZFS6", "BAF51", "F7", "KZFS1", "N-SK2HT", "K5G20", "SK14", "LAKL12",
    ];

    #[test]
    fn empty_file_gives_empty_catalog() {
        assert!(GlassCatalog::parse("").unwrap().is_empty());
        assert!(GlassCatalog::parse("# only a comment\n\n")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn shipped_catalogs_contain_the_relay_glasses() {
        let relay = GlassCatalog::relay_glasses();
        assert_eq!(relay.len(), 10);
        let shipped = GlassCatalog::shipped();
        for name in FIG1 {
            assert!(relay.contains(name), "{name}");
            assert!(shipped.contains(name), "{name}");
        }
        assert!(shipped.contains("n-bk7"));
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = "F7 constant 1.6 0 0 0 0 0 0.4 0.7\nf7 constant 1.7 0 0 0 0 0 0.4 0.7\n";
        match GlassCatalog::parse(text) {
            Err(GlassError::DuplicateGlass { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_model_rejected() {
        let text = "X cauchy 1.5 0 0 0 0 0 0.4 0.7\n";
        assert!(matches!(
            GlassCatalog::parse(text),
            Err(GlassError::UnknownDispersionModel { line: 1, .. })
        ));
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = "# header\nA constant 1.5 0 0 0 0 0 0.4\n";
        assert!(matches!(
            GlassCatalog::parse(text),
            Err(GlassError::ParseError { line: 2, .. })
        ));
    }

    #[test]
    fn normal_dispersion_for_every_shipped_glass() {
        for m in GlassCatalog::shipped().entries() {
            let nf = m.refractive_index(LINE_F).unwrap();
            let nd = m.refractive_index(LINE_D).unwrap();
            let nc = m.refractive_index(LINE_C).unwrap();
            assert!(nf > nd && nd > nc, "{}", m.name);
        }
    }

    #[test]
    fn glass_map_region() {
        let cat = GlassCatalog::shipped();
        for i in 0..cat.len() {
            let (nd, vd) = cat.nd_vd(i).unwrap();
            assert!(nd > 1.4 && nd < 2.1, "{} nd {nd}", cat.entries()[i].name);
            assert!(vd > 15.0 && vd < 100.0, "{} vd {vd}", cat.entries()[i].name);
        }
    }

    #[test]
    fn catalog_values_match_vendor_glass_codes() {
        // nd / Vd as printed in the SCHOTT data sheets
        let expected = [
            ("LAK8", 1.713, 53.8),
            ("LAK11", 1.6583, 57.3),
            ("SK14", 1.60311, 60.6),
            ("F7", 1.62536, 35.6),
            ("N-SK2HT", 1.60738, 56.65),
            ("K5G20", 1.52344, 56.76),
            ("LAKL12", 1.6779, 54.92),
        ];
        let cat = GlassCatalog::shipped();
        for (name, nd, vd) in expected {
            let (n, v) = cat.nd_vd(cat.position(name).unwrap()).unwrap();
            assert!((n - nd).abs() < 2e-4, "{name}: {n}");
            assert!((v - vd).abs() < 0.3, "{name}: {v}");
        }
    }

    #[test]
    fn index_continuity_across_visible() {
        for m in GlassCatalog::shipped().entries() {
            let mut l = 0.40;
            while l < 0.70 {
                let a = m.refractive_index(l).unwrap();
                let b = m.refractive_index(l + 1e-4).unwrap();
                assert!((a - b).abs() < 1e-3);
                l += 0.005;
            }
        }
    }

    #[test]
    fn nearest_puts_self_first_and_breaks_ties_by_index() {
        let cat = GlassCatalog::relay_glasses();
        let i = cat.position("F7").unwrap();
        let (nd, vd) = cat.nd_vd(i).unwrap();
        let near = cat.nearest(nd, vd, 3);
        assert_eq!(near[0], i);
        assert_eq!(near.len(), 3);

        let twins = GlassCatalog::parse(
            "A sellmeier 1 0 0 0.01 0 0 0.3 2\nB sellmeier 1 0 0 0.01 0 0 0.3 2\n",
        )
        .unwrap();
        assert_eq!(twins.nearest(1.5, 60.0, 2), vec![0, 1]);
    }

    #[test]
    fn air_always_resolves() {
        let cat = GlassCatalog::new();
        assert!(cat.resolve("air").unwrap().is_air());
        assert!(cat.resolve("F7").is_none());
    }
}
