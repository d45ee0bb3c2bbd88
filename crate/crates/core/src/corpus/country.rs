//! Country metadata: English-core membership, Common Language Index scores
//! and continent labels.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::util::parse_bool;
use crate::{Error, Result};

/// Countries treated as core English-speaking. Their observations are dropped
/// from the panel and they anchor the `has_eng_coauthor` control.
pub const ENGLISH_CORE: [&str; 6] = ["US", "GB", "CA", "AU", "NZ", "IE"];

pub fn is_english_core_code(code: &str) -> bool {
    ENGLISH_CORE.contains(&code)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliComponents {
    pub cnl: f64,
    pub col: f64,
    pub lp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryMeta {
    pub country_code: String,
    pub is_english_core: bool,
    pub cli_score: Option<f64>,
    pub cli_components: Option<CliComponents>,
    pub continent: Option<String>,
}

/// Weights combining (CNL, COL, LP) into a composite score when the file
/// carries only components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CliWeights(pub [f64; 3]);

impl Default for CliWeights {
    fn default() -> Self {
        CliWeights([1.0, 1.0, 1.0])
    }
}

impl CliWeights {
    pub fn combine(&self, c: &CliComponents) -> f64 {
        let [a, b, d] = self.0;
        (a * c.cnl + b * c.col + d * c.lp) / (a + b + d)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CountryTable {
    countries: BTreeMap<String, CountryMeta>,
}

fn unit_interval(row: usize, name: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::InvalidCountryMeta {
            row,
            reason: format!("{name} = {v} outside [0, 1]"),
        })
    }
}

fn opt_f64(row: usize, name: &str, raw: Option<&str>) -> Result<Option<f64>> {
    match raw.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s.parse::<f64>().map(Some).map_err(|_| Error::InvalidCountryMeta {
            row,
            reason: format!("{name} = {s:?} is not a number"),
        }),
    }
}

impl CountryTable {
    pub fn from_rows(rows: impl IntoIterator<Item = CountryMeta>) -> Result<Self> {
        let mut countries = BTreeMap::new();
        for (i, m) in rows.into_iter().enumerate() {
            if m.is_english_core != is_english_core_code(&m.country_code) {
                return Err(Error::InvalidCountryMeta {
                    row: i + 1,
                    reason: format!(
                        "{} english_core={} contradicts the core set {:?}",
                        m.country_code, m.is_english_core, ENGLISH_CORE
                    ),
                });
            }
            if countries.insert(m.country_code.clone(), m).is_some() {
                return Err(Error::InvalidCountryMeta {
                    row: i + 1,
                    reason: "duplicate country".into(),
                });
            }
        }
        Ok(CountryTable { countries })
    }

    pub fn load(path: &Path, weights: CliWeights) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, weights)
    }

    /// Parses delimited text with header
    /// `country_code,is_english_core,cli_score,cnl,col,lp[,continent]`.
    pub fn parse(text: &str, weights: CliWeights) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let code_i = col("country_code").ok_or_else(|| Error::InvalidCountryMeta {
            row: 0,
            reason: "missing country_code column".into(),
        })?;
        let core_i = col("is_english_core");
        let (cli_i, cnl_i, col_i, lp_i, cont_i) =
            (col("cli_score"), col("cnl"), col("col"), col("lp"), col("continent"));

        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let get = |idx: Option<usize>| idx.and_then(|k| rec.get(k));
            let code = rec.get(code_i).unwrap_or("").trim().to_ascii_uppercase();
            if code.is_empty() {
                return Err(Error::InvalidCountryMeta {
                    row,
                    reason: "empty country_code".into(),
                });
            }
            let is_core = match get(core_i).map(str::trim) {
                None | Some("") => is_english_core_code(&code),
                Some(s) => parse_bool(s).ok_or_else(|| Error::InvalidCountryMeta {
                    row,
                    reason: format!("is_english_core = {s:?} is not a boolean"),
                })?,
            };
            let cli = opt_f64(row, "cli_score", get(cli_i))?
                .map(|v| unit_interval(row, "cli_score", v))
                .transpose()?;
            let parts = [
                opt_f64(row, "cnl", get(cnl_i))?,
                opt_f64(row, "col", get(col_i))?,
                opt_f64(row, "lp", get(lp_i))?,
            ];
            let components = match parts {
                [Some(a), Some(b), Some(c)] => Some(CliComponents {
                    cnl: unit_interval(row, "cnl", a)?,
                    col: unit_interval(row, "col", b)?,
                    lp: unit_interval(row, "lp", c)?,
                }),
                [None, None, None] => None,
                _ => {
                    return Err(Error::InvalidCountryMeta {
                        row,
                        reason: "CLI components must be given all together".into(),
                    })
                }
            };
            let cli_score = cli.or_else(|| components.as_ref().map(|c| weights.combine(c)));
            let continent = get(cont_i)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string);
            rows.push(CountryMeta {
                country_code: code,
                is_english_core: is_core,
                cli_score,
                cli_components: components,
                continent,
            });
        }
        Self::from_rows(rows)
    }

    pub fn get(&self, code: &str) -> Option<&CountryMeta> {
        self.countries.get(code)
    }

    pub fn require(&self, code: &str) -> Result<&CountryMeta> {
        self.get(code).ok_or_else(|| Error::MissingCountry(code.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &CountryMeta> {
        self.countries.values()
    }

    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("country_code,is_english_core,cli_score,cnl,col,lp,continent\n");
        for m in self.countries.values() {
            let f = |v: Option<f64>| v.map(crate::util::fmt_f64).unwrap_or_default();
            let c = m.cli_components.as_ref();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                m.country_code,
                m.is_english_core,
                f(m.cli_score),
                f(c.map(|c| c.cnl)),
                f(c.map(|c| c.col)),
                f(c.map(|c| c.lp)),
                m.continent.as_deref().unwrap_or("")
            ));
        }
        out
    }
}
