use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use spectra_core::{ContractionModel, Letter, Potential, RatioTable, TransitionSystem};

pub const SCHEMA: &str = "spectra-lab/1";

pub const BUNDLED: &[(&str, &str)] = &[
    ("cf12", include_str!("../models/cf12.json")),
    ("golden", include_str!("../models/golden.json")),
    ("cf1", include_str!("../models/cf1.json")),
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema: String,
    pub alphabet: Vec<String>,
    pub transitions: Transitions,
    pub contraction: ContractionSpec,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub metadata: Metadata,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Transitions {
    /// Only "full" is accepted.
    Keyword(String),
    Pairs(Vec<(String, String)>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContractionSpec {
    Gauss { digits: Vec<u32> },
    /// Keys are letters or "a->b" overrides for b entered from a.
    Product { u: BTreeMap<String, f64>, s: BTreeMap<String, f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    CfSum {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        digits: Option<Vec<u32>>,
    },
    WindowTable { radius: usize, values: BTreeMap<String, f64>, modulus: f64 },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

/// A parsed, validated model plus the canonical text used for cache keys.
pub struct Model {
    pub ts: TransitionSystem,
    pub contraction: ContractionModel,
    pub potential: Potential,
    pub canonical: String,
}

/// Looks for a file first, then a bundled model of that name.
pub fn load(arg: &str) -> Result<Model, String> {
    let text = if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).map_err(|e| format!("cannot read {arg}: {e}"))?
    } else if let Some((_, t)) = BUNDLED.iter().find(|(n, _)| *n == arg) {
        t.to_string()
    } else {
        return Err(format!("no model file or bundled model named `{arg}`"));
    };
    parse(&text)
}

pub fn parse(text: &str) -> Result<Model, String> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| format!("schema error: {e}"))?;
    build(file)
}

fn build(file: ModelFile) -> Result<Model, String> {
    if file.schema != SCHEMA {
        return Err(format!("schema tag `{}` is not `{SCHEMA}`", file.schema));
    }
    let labels = file.alphabet.clone();
    let ts = match &file.transitions {
        Transitions::Keyword(k) if k == "full" => TransitionSystem::full(labels),
        Transitions::Keyword(k) => return Err(format!("transitions must be \"full\" or a pair list, got `{k}`")),
        Transitions::Pairs(pairs) => {
            let tmp = TransitionSystem::full(labels.clone()).map_err(|e| e.to_string())?;
            let mut ps = Vec::with_capacity(pairs.len());
            for (a, b) in pairs {
                ps.push((letter(&tmp, a)?, letter(&tmp, b)?));
            }
            TransitionSystem::new(labels, &ps)
        }
    }
    .map_err(|e| format!("transitions: {e}"))?;

    let n = ts.len();
    let contraction = match &file.contraction {
        ContractionSpec::Gauss { digits } => {
            if digits.len() != n {
                return Err(format!("gauss digits: expected {n} entries, got {}", digits.len()));
            }
            if digits.contains(&0) {
                return Err("gauss digits must be positive".into());
            }
            ContractionModel::gauss(digits.clone())
        }
        ContractionSpec::Product { u, s } => {
            let u = ratio_table(&ts, u).map_err(|e| format!("contraction.u: {e}"))?;
            let s = ratio_table(&ts, s).map_err(|e| format!("contraction.s: {e}"))?;
            ContractionModel::product(u, s).map_err(|e| format!("contraction: {e}"))?
        }
    };

    let potential = match &file.potential {
        PotentialSpec::CfSum { digits } => {
            let digits = match (digits, contraction.digits()) {
                (Some(d), _) => d.clone(),
                (None, Some(d)) => d.to_vec(),
                (None, None) => ts
                    .labels()
                    .iter()
                    .map(|l| l.parse::<u32>().ok().filter(|&d| d > 0))
                    .collect::<Option<Vec<_>>>()
                    .ok_or("cf_sum needs digits: give them explicitly or use numeric letters")?,
            };
            if digits.len() != n || digits.contains(&0) {
                return Err(format!("cf_sum digits: expected {n} positive entries"));
            }
            Potential::CfSum { digits }
        }
        PotentialSpec::WindowTable { radius, values, modulus } => {
            if !(*modulus >= 0.0 && modulus.is_finite()) {
                return Err("window_table modulus must be finite and non-negative".into());
            }
            let mut table = HashMap::with_capacity(values.len());
            for (k, &v) in values {
                let w = ts.parse_word(k).map_err(|e| format!("window_table key `{k}`: {e}"))?;
                if w.len() != 2 * radius + 1 {
                    return Err(format!("window_table key `{k}` must have length {}", 2 * radius + 1));
                }
                if !v.is_finite() {
                    return Err(format!("window_table value for `{k}` is not finite"));
                }
                table.insert(w, v);
            }
            Potential::WindowTable { radius: *radius, values: table, modulus: *modulus }
        }
    };

    let canonical = serde_json::to_string(&file).map_err(|e| e.to_string())?;
    Ok(Model { ts, contraction, potential, canonical })
}

fn letter(ts: &TransitionSystem, label: &str) -> Result<Letter, String> {
    ts.letter(label).ok_or_else(|| format!("unknown letter `{label}`"))
}

fn ratio_table(ts: &TransitionSystem, map: &BTreeMap<String, f64>) -> Result<RatioTable, String> {
    let n = ts.len();
    let mut letters: Vec<Option<f64>> = vec![None; n];
    let mut overrides = BTreeMap::new();
    for (k, &r) in map {
        if let Some((a, b)) = k.split_once("->") {
            let (a, b) = (letter(ts, a.trim())?, letter(ts, b.trim())?);
            if !ts.allows(a, b) {
                return Err(format!("override `{k}` is not an allowed transition"));
            }
            overrides.insert((a, b), r);
        } else {
            letters[letter(ts, k)? as usize] = Some(r);
        }
    }
    let mut table = Vec::with_capacity(n);
    for (b, r) in letters.into_iter().enumerate() {
        // a letter given only through overrides takes the largest of them
        let r = r.or_else(|| {
            overrides
                .iter()
                .filter(|((_, to), _)| *to as usize == b)
                .map(|(_, &r)| r)
                .reduce(f64::max)
        });
        table.push(r.ok_or_else(|| format!("no ratio for letter `{}`", ts.labels()[b]))?);
    }
    let mut t = RatioTable::letters(table);
    t.transition = overrides;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_models_parse() {
        for (name, text) in BUNDLED {
            let m = parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!m.ts.is_empty());
        }
    }

    #[test]
    fn rejects_unknown_fields_and_bad_schema() {
        let base = r#"{"schema":"spectra-lab/1","alphabet":["1","2"],"transitions":"full","contraction":{"kind":"gauss","digits":[1,2]},"potential":{"kind":"cf_sum"}}"#;
        assert!(parse(base).is_ok());
        assert!(parse(&base.replace("\"full\"", "\"full\",\"extra\":1")).is_err());
        assert!(parse(&base.replace("spectra-lab/1", "spectra-lab/2")).is_err());
        assert!(parse(&base.replace("\"digits\":[1,2]", "\"digits\":[1,2],\"x\":0")).is_err());
        assert!(parse(&base.replace("[1,2]}", "[1]}")).is_err());
    }

    #[test]
    fn product_override_defaults() {
        let text = r#"{"schema":"spectra-lab/1","alphabet":["a","b"],"transitions":[["a","a"],["a","b"],["b","a"]],
            "contraction":{"kind":"product","u":{"a":0.4,"a->b":0.3},"s":{"a":0.5,"b":0.5}},
            "potential":{"kind":"window_table","radius":0,"values":{"a":1.0,"b":2.0},"modulus":0.0}}"#;
        let m = parse(text).unwrap();
        assert!(!m.contraction.is_gauss());
        assert!(parse(&text.replace("\"a->b\":0.3", "\"b->a\":0.3")).is_err());
    }
}
