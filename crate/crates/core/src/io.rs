//! Poset JSON and facet-list files.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constructors::{standard_weight_scheme, FacetList};
use crate::error::{HdxError, Result};
use crate::poset::{GradedPoset, WeightScheme, WeightedPoset};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ElementRecord {
    pub id: u64,
    pub rank: i32,
    pub label: String,
}

/// On-disk poset. `p` is keyed by "child,parent"; when absent the standard
/// scheme is used. `m_top` is keyed by top element id and need not be normalized.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PosetFile {
    pub d: i32,
    pub elements: Vec<ElementRecord>,
    pub covers: Vec<[u64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_top: Option<BTreeMap<String, f64>>,
}

impl PosetFile {
    /// Element ids are the poset's own ids; `p` is written only for
    /// non-standard schemes.
    pub fn from_weighted(wp: &WeightedPoset) -> PosetFile {
        let p = &wp.poset;
        let elements = p
            .ids()
            .map(|x| ElementRecord { id: x.0 as u64, rank: p.rank(x), label: p.label(x).to_string() })
            .collect();
        let covers = p.covers().iter().map(|(c, q)| [c.0 as u64, q.0 as u64]).collect();
        let probs = (!wp.is_standard()).then(|| {
            p.ids()
                .flat_map(|y| p.children(y).iter().map(move |&c| (c, y)))
                .map(|(c, y)| (format!("{},{}", c.0, y.0), wp.p(y, c)))
                .collect()
        });
        let m_top = p.level(p.d()).iter().map(|&t| (t.0.to_string(), wp.m(t))).collect();
        PosetFile { d: p.d(), elements, covers, p: probs, m_top: Some(m_top) }
    }

    pub fn to_weighted(&self) -> Result<WeightedPoset> {
        let mut index: HashMap<u64, usize> = HashMap::new();
        for (i, e) in self.elements.iter().enumerate() {
            if index.insert(e.id, i).is_some() {
                return Err(HdxError::BadArgs(format!("duplicate element id {}", e.id)));
            }
        }
        let lookup = |id: u64| index.get(&id).copied().ok_or_else(|| HdxError::BadArgs(format!("unknown element id {id}")));
        let covers = self.covers.iter().map(|[c, p]| Ok((lookup(*c)?, lookup(*p)?))).collect::<Result<Vec<_>>>()?;
        let parts = self.elements.iter().map(|e| (e.rank, e.label.clone())).collect();
        let (poset, new_id) = GradedPoset::from_parts(parts, &covers)?;
        if poset.d() != self.d {
            return Err(HdxError::BadArgs(format!("declared d = {} but the top rank is {}", self.d, poset.d())));
        }
        let mut old_id = vec![0u64; self.elements.len()];
        for (i, e) in self.elements.iter().enumerate() {
            old_id[new_id[i].idx()] = e.id;
        }
        let top: Option<Vec<f64>> = self
            .m_top
            .as_ref()
            .map(|m| {
                poset
                    .level(poset.d())
                    .iter()
                    .map(|t| {
                        let id = old_id[t.idx()];
                        m.get(&id.to_string()).copied().ok_or_else(|| HdxError::BadArgs(format!("m_top lacks top element {id}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let weights = match &self.p {
            None => standard_weight_scheme(&poset, top.as_deref())?,
            Some(map) => {
                let mut used = 0;
                let p = poset
                    .ids()
                    .map(|y| {
                        poset
                            .children(y)
                            .iter()
                            .map(|&c| {
                                let key = format!("{},{}", old_id[c.idx()], old_id[y.idx()]);
                                used += 1;
                                map.get(&key).copied().ok_or_else(|| HdxError::BadArgs(format!("p lacks cover {key}")))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                if used != map.len() {
                    return Err(HdxError::BadArgs(format!("p has {} entries for {used} covers", map.len())));
                }
                let top = top.unwrap_or_else(|| vec![1.0; poset.level_size(poset.d())]);
                WeightScheme::propagate(&poset, p, &top)
            }
        };
        Ok(WeightedPoset::new(poset, weights))
    }
}

fn json_error(e: serde_json::Error) -> HdxError {
    HdxError::Parse { line: e.line(), msg: e.to_string() }
}

pub fn parse_poset(text: &str) -> Result<WeightedPoset> {
    serde_json::from_str::<PosetFile>(text).map_err(json_error)?.to_weighted()
}

pub fn load_poset(path: &Path) -> Result<WeightedPoset> {
    parse_poset(&std::fs::read_to_string(path)?)
}

pub fn poset_to_json(wp: &WeightedPoset) -> Result<String> {
    Ok(serde_json::to_string_pretty(&PosetFile::from_weighted(wp))?)
}

/// One facet per line as whitespace-separated vertex integers; blank lines
/// and `#` comments are skipped.
pub fn parse_facets(text: &str) -> Result<FacetList> {
    let mut facets = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let facet = line
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|_| HdxError::Parse { line: i + 1, msg: format!("bad vertex {t:?}") }))
            .collect::<Result<Vec<_>>>()?;
        facets.push(facet);
    }
    if facets.is_empty() {
        return Err(HdxError::Parse { line: 0, msg: "no facets".into() });
    }
    FacetList::new(facets)
}

pub fn load_facets(path: &Path) -> Result<FacetList> {
    parse_facets(&std::fs::read_to_string(path)?)
}
