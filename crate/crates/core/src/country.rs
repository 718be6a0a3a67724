//! Country reference table: ISO3 codes, World Bank region and income group,
//! and the aliases used to resolve free-text country tokens.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::error::CountryTableError;

vocabulary! {
    /// World Bank regions.
    Region7, "region7" {
        Eas => "EAS",
        Ecs => "ECS",
        Lcn => "LCN",
        Mea => "MEA",
        Nac => "NAC",
        Sas => "SAS",
        Ssf => "SSF",
    }
}

vocabulary! {
    IncomeGroup, "income_group" {
        High => "high",
        UpperMiddle => "upper_middle",
        LowerMiddle => "lower_middle",
        Low => "low",
        /// Territories and historical entities without a classification.
        Unclassified => "unclassified",
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountryMeta {
    pub country_iso3: String,
    pub name: String,
    pub region7: Region7,
    pub income_group: IncomeGroup,
    pub aliases: Vec<String>,
}

#[derive(Deserialize)]
struct Row {
    country_iso3: String,
    name: String,
    region7: String,
    income_group: String,
    #[serde(default)]
    aliases: String,
}

const BUILTIN: &str = include_str!("../data/countries.csv");

/// Lookup table keyed by ISO3 code with a case-insensitive alias index.
#[derive(Debug, Clone)]
pub struct CountryTable {
    by_code: BTreeMap<String, CountryMeta>,
    aliases: HashMap<String, String>,
}

fn fold(token: &str) -> String {
    token.trim().to_lowercase()
}

impl CountryTable {
    /// The table shipped with the crate: a single World Bank classification
    /// snapshot plus historical entities that appear in long-run series.
    pub fn builtin() -> &'static CountryTable {
        static TABLE: OnceLock<CountryTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            CountryTable::from_reader(BUILTIN.as_bytes()).expect("builtin country table is valid")
        })
    }

    pub fn load(path: &Path) -> Result<CountryTable, CountryTableError> {
        let file = std::fs::File::open(path).map_err(|source| CountryTableError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        CountryTable::from_reader(file)
    }

    /// Reads `country_iso3,name,region7,income_group,aliases`, aliases
    /// separated by `;`.
    pub fn from_reader<R: Read>(reader: R) -> Result<CountryTable, CountryTableError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(|e| CountryTableError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        let headers = headers.clone();
        let mut entries = Vec::new();
        for result in rdr.records() {
            let record = result.map_err(|e| CountryTableError::Parse {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let bad = |message: String| CountryTableError::Parse { line, message };
            let row: Row = record
                .deserialize(Some(&headers))
                .map_err(|e| bad(e.to_string()))?;
            let region7 = row.region7.parse().map_err(|e| bad(format!("{e}")))?;
            let income_group = row.income_group.parse().map_err(|e| bad(format!("{e}")))?;
            let code = row.country_iso3.trim().to_string();
            if code.len() != 3 || !code.bytes().all(|b| b.is_ascii_uppercase()) {
                return Err(bad(format!("'{code}' is not an ISO3 code")));
            }
            entries.push(CountryMeta {
                country_iso3: code,
                name: row.name.trim().to_string(),
                region7,
                income_group,
                aliases: row
                    .aliases
                    .split(';')
                    .map(str::trim)
                    .filter(|a| !a.is_empty())
                    .map(String::from)
                    .collect(),
            });
        }
        CountryTable::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<CountryMeta>) -> Result<CountryTable, CountryTableError> {
        let mut by_code = BTreeMap::new();
        for meta in entries {
            let code = meta.country_iso3.clone();
            if by_code.insert(code.clone(), meta).is_some() {
                return Err(CountryTableError::DuplicateCode(code));
            }
        }
        let mut aliases: HashMap<String, String> = HashMap::new();
        for meta in by_code.values() {
            for alias in std::iter::once(&meta.name).chain(&meta.aliases) {
                let key = fold(alias);
                let clash = by_code
                    .keys()
                    .find(|c| fold(c) == key && *c != &meta.country_iso3)
                    .cloned()
                    .or_else(|| {
                        aliases
                            .get(&key)
                            .filter(|c| *c != &meta.country_iso3)
                            .cloned()
                    });
                if let Some(first) = clash {
                    return Err(CountryTableError::AmbiguousAlias {
                        alias: alias.clone(),
                        first,
                        second: meta.country_iso3.clone(),
                    });
                }
                aliases.insert(key, meta.country_iso3.clone());
            }
        }
        Ok(CountryTable { by_code, aliases })
    }

    pub fn get(&self, iso3: &str) -> Option<&CountryMeta> {
        self.by_code.get(iso3)
    }

    pub fn len(&self) -> usize {
        self.by_code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_code.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CountryMeta> {
        self.by_code.values()
    }

    /// Resolves a code, name, or alias to its canonical ISO3 code.
    ///
    /// Matching is case-insensitive after trimming. Exact ISO3 matches win
    /// over aliases.
    pub fn normalize_country(&self, token: &str) -> Option<&str> {
        let upper = token.trim().to_ascii_uppercase();
        if let Some((code, _)) = self.by_code.get_key_value(&upper) {
            return Some(code.as_str());
        }
        let code = self.aliases.get(&fold(token))?;
        self.by_code.get_key_value(code).map(|(c, _)| c.as_str())
    }

    pub fn region_of(&self, iso3: &str) -> Option<Region7> {
        self.get(iso3).map(|m| m.region7)
    }

    pub fn income_group_of(&self, iso3: &str) -> Option<IncomeGroup> {
        self.get(iso3).map(|m| m.income_group)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_code_resolves_to_itself() {
        let t = CountryTable::builtin();
        assert_eq!(t.normalize_country("COL"), Some("COL"));
        assert_eq!(t.normalize_country(" col "), Some("COL"));
    }

    #[test]
    fn names_and_historical_aliases() {
        let t = CountryTable::builtin();
        assert_eq!(t.normalize_country("Colombia"), Some("COL"));
        assert_eq!(t.normalize_country("Zaire"), Some("COD"));
        assert_eq!(t.normalize_country("ZAIRE"), Some("COD"));
        assert_eq!(t.normalize_country("Congo, Dem. Rep."), Some("COD"));
        assert_eq!(t.normalize_country("Burma"), Some("MMR"));
        assert_eq!(t.normalize_country("Swaziland"), Some("SWZ"));
        assert_eq!(t.normalize_country("Côte d'Ivoire"), Some("CIV"));
        assert_eq!(t.normalize_country("USSR"), Some("SUN"));
    }

    #[test]
    fn alpha2_codes_resolve() {
        let t = CountryTable::builtin();
        assert_eq!(t.normalize_country("co"), Some("COL"));
        assert_eq!(t.normalize_country("FR"), Some("FRA"));
        assert_eq!(t.normalize_country("EL"), Some("GRC"));
    }

    #[test]
    fn unknown_token() {
        let t = CountryTable::builtin();
        assert_eq!(t.normalize_country("Atlantis"), None);
        assert_eq!(t.normalize_country(""), None);
    }

    #[test]
    fn builtin_covers_all_regions_and_groups() {
        let t = CountryTable::builtin();
        assert!(t.len() >= 222);
        for r in Region7::ALL {
            assert!(t.iter().any(|m| m.region7 == *r), "{r}");
        }
        for g in IncomeGroup::ALL {
            assert!(t.iter().any(|m| m.income_group == *g), "{g}");
        }
        assert_eq!(t.region_of("COL"), Some(Region7::Lcn));
        assert_eq!(t.income_group_of("USA"), Some(IncomeGroup::High));
    }

    #[test]
    fn ambiguous_alias_is_rejected() {
        let csv = "country_iso3,name,region7,income_group,aliases\n\
                   AAA,Alpha,EAS,high,Shared\n\
                   BBB,Beta,EAS,low,Shared\n";
        assert!(matches!(
            CountryTable::from_reader(csv.as_bytes()),
            Err(CountryTableError::AmbiguousAlias { .. })
        ));
    }

    #[test]
    fn alias_may_not_shadow_another_code() {
        let csv = "country_iso3,name,region7,income_group,aliases\n\
                   AAA,Alpha,EAS,high,BBB\n\
                   BBB,Beta,EAS,low,\n";
        assert!(CountryTable::from_reader(csv.as_bytes()).is_err());
    }

    #[test]
    fn duplicate_code_is_rejected() {
        let csv = "country_iso3,name,region7,income_group,aliases\n\
                   AAA,Alpha,EAS,high,\n\
                   AAA,Alpha again,EAS,high,\n";
        assert!(matches!(
            CountryTable::from_reader(csv.as_bytes()),
            Err(CountryTableError::DuplicateCode(_))
        ));
    }

    #[test]
    fn bad_region_code_is_a_parse_error() {
        let csv = "country_iso3,name,region7,income_group,aliases\nAAA,Alpha,XYZ,high,\n";
        assert!(matches!(
            CountryTable::from_reader(csv.as_bytes()),
            Err(CountryTableError::Parse { .. })
        ));
    }
}
