//! Detailed field codes and their aggregated field groups.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const DEFAULT_FIELD_MAP: &str = include_str!("../../data/field_map.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FieldGroup {
    LifeSci,
    PhysSci,
    EngTech,
    SocSci,
    Excluded,
}

impl FieldGroup {
    pub const INCLUDED: [FieldGroup; 4] = [
        FieldGroup::EngTech,
        FieldGroup::LifeSci,
        FieldGroup::PhysSci,
        FieldGroup::SocSci,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FieldGroup::LifeSci => "LifeSci",
            FieldGroup::PhysSci => "PhysSci",
            FieldGroup::EngTech => "EngTech",
            FieldGroup::SocSci => "SocSci",
            FieldGroup::Excluded => "Excluded",
        }
    }
}

impl fmt::Display for FieldGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match norm.as_str() {
            "lifesci" | "lifesciences" => FieldGroup::LifeSci,
            "physsci" | "physicalsciences" => FieldGroup::PhysSci,
            "engtech" | "engineeringandtechnology" => FieldGroup::EngTech,
            "socsci" | "socialsciences" => FieldGroup::SocSci,
            "excluded" => FieldGroup::Excluded,
            _ => return Err(Error::InvalidFieldMap(format!("unknown aggregated group {s:?}"))),
        })
    }
}

/// Total map from detailed field codes to aggregated groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMap {
    map: BTreeMap<String, FieldGroup>,
}

impl Default for FieldMap {
    /// Detailed fields of the four analysis groups, with Multidisciplinary and
    /// Arts and Humanities excluded.
    fn default() -> Self {
        Self::parse(DEFAULT_FIELD_MAP).expect("bundled field map is valid")
    }
}

impl FieldMap {
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, FieldGroup)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (code, group) in pairs {
            let code = code.into();
            if let Some(prev) = map.insert(code.clone(), group) {
                if prev != group {
                    return Err(Error::InvalidFieldMap(format!(
                        "{code:?} mapped to both {prev} and {group}"
                    )));
                }
            }
        }
        Ok(FieldMap { map })
    }

    /// Parses delimited text `detailed_code,aggregated_group` with a header row.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut pairs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let code = rec.get(0).unwrap_or("").to_string();
            if code.is_empty() {
                return Err(Error::InvalidFieldMap("empty detailed code".into()));
            }
            let group: FieldGroup = rec.get(1).unwrap_or("").parse()?;
            pairs.push((code, group));
        }
        Self::from_pairs(pairs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn group(&self, code: &str) -> Result<FieldGroup> {
        self.map
            .get(code)
            .copied()
            .ok_or_else(|| Error::UnknownFieldCode(code.to_string()))
    }

    /// Maps a publication's detailed fields, dropping excluded groups and
    /// duplicate codes while keeping first-seen order.
    pub fn map_fields(&self, codes: &[String]) -> Result<Vec<(String, FieldGroup)>> {
        let mut out: Vec<(String, FieldGroup)> = Vec::with_capacity(codes.len());
        for code in codes {
            let group = self.group(code)?;
            if group != FieldGroup::Excluded && !out.iter().any(|(c, _)| c == code) {
                out.push((code.clone(), group));
            }
        }
        Ok(out)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, FieldGroup)> {
        self.map.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("detailed_code,aggregated_group\n");
        for (code, g) in &self.map {
            s.push_str(&format!("{code},{g}\n"));
        }
        s
    }
}
