//! Hemisphere map of the regions of interest and the induced column order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hemisphere {
    L,
    R,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiEntry {
    pub name: String,
    pub hemisphere: Hemisphere,
    pub homolog: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lobe: Option<String>,
}

/// Validated list of regions in which every left region has exactly one right homolog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiMap {
    entries: Vec<RoiEntry>,
}

impl RoiMap {
    pub fn new(entries: Vec<RoiEntry>) -> CliResult<Self> {
        let mut by_name = BTreeMap::new();
        for (k, e) in entries.iter().enumerate() {
            if by_name.insert(e.name.as_str(), k).is_some() {
                return Err(CliError::config(format!("region '{}' listed twice", e.name)));
            }
        }
        for e in &entries {
            let Some(&h) = by_name.get(e.homolog.as_str()) else {
                return Err(CliError::config(format!("homolog '{}' of '{}' is not listed", e.homolog, e.name)));
            };
            let other = &entries[h];
            if other.hemisphere == e.hemisphere || other.homolog != e.name {
                return Err(CliError::config(format!(
                    "'{}' and '{}' are not a left/right homolog pair",
                    e.name, e.homolog
                )));
            }
        }
        if entries.is_empty() {
            return Err(CliError::config("empty region map"));
        }
        Ok(RoiMap { entries })
    }

    /// Reads `name,hemisphere,homolog[,lobe]` rows with a header line.
    pub fn load(path: &Path) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_path(path)
            .map_err(|e| CliError::parse(path, e.to_string()))?;
        let mut entries = Vec::new();
        for (k, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| CliError::parse(path, e.to_string()))?;
            let line = k + 2;
            if rec.len() < 3 || rec.len() > 4 {
                return Err(CliError::parse(path, format!("line {line}: expected 3 or 4 fields")));
            }
            let hemisphere = match &rec[1] {
                "L" | "l" | "left" => Hemisphere::L,
                "R" | "r" | "right" => Hemisphere::R,
                other => return Err(CliError::parse(path, format!("line {line}: hemisphere '{other}'"))),
            };
            entries.push(RoiEntry {
                name: rec[0].to_string(),
                hemisphere,
                homolog: rec[2].to_string(),
                lobe: rec.get(3).filter(|s| !s.is_empty()).map(str::to_owned),
            });
        }
        RoiMap::new(entries).map_err(|e| CliError::parse(path, e.to_string()))
    }

    pub fn entries(&self) -> &[RoiEntry] {
        &self.entries
    }

    /// Solver order: left regions in map order, then their homologs in the same order.
    pub fn ordered_names(&self) -> Vec<String> {
        let left: Vec<&RoiEntry> = self.entries.iter().filter(|e| e.hemisphere == Hemisphere::L).collect();
        left.iter()
            .map(|e| e.name.clone())
            .chain(left.iter().map(|e| e.homolog.clone()))
            .collect()
    }

    /// `perm[k]` is the input column placed at solver position `k`.
    pub fn permutation(&self, columns: &[String]) -> CliResult<Vec<usize>> {
        if columns.len() != self.entries.len() {
            return Err(CliError::config(format!(
                "{} data columns but {} mapped regions",
                columns.len(),
                self.entries.len()
            )));
        }
        let index: BTreeMap<&str, usize> = columns.iter().enumerate().map(|(k, c)| (c.as_str(), k)).collect();
        self.ordered_names()
            .iter()
            .map(|n| {
                index
                    .get(n.as_str())
                    .copied()
                    .ok_or_else(|| CliError::config(format!("region '{n}' not among the data columns")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(name: &str, h: Hemisphere, homolog: &str) -> RoiEntry {
        RoiEntry {
            name: name.into(),
            hemisphere: h,
            homolog: homolog.into(),
            lobe: None,
        }
    }

    #[test]
    fn reorders_left_first() {
        let map = RoiMap::new(vec![
            entry("aR", Hemisphere::R, "aL"),
            entry("aL", Hemisphere::L, "aR"),
            entry("bL", Hemisphere::L, "bR"),
            entry("bR", Hemisphere::R, "bL"),
        ])
        .unwrap();
        assert_eq!(map.ordered_names(), ["aL", "bL", "aR", "bR"]);
        let cols: Vec<String> = ["bR", "aL", "aR", "bL"].iter().map(|s| s.to_string()).collect();
        assert_eq!(map.permutation(&cols).unwrap(), vec![1, 3, 2, 0]);
    }

    #[test]
    fn rejects_broken_maps() {
        assert!(RoiMap::new(vec![entry("a", Hemisphere::L, "b")]).is_err());
        assert!(RoiMap::new(vec![entry("a", Hemisphere::L, "b"), entry("b", Hemisphere::L, "a")]).is_err());
        assert!(RoiMap::new(vec![
            entry("a", Hemisphere::L, "b"),
            entry("b", Hemisphere::R, "a"),
            entry("c", Hemisphere::R, "a"),
        ])
        .is_err());
    }
}
