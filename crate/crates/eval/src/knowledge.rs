//! Reference tables for travel planning: flights, accommodations,
//! restaurants, attractions and ground distances.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flight {
    pub flight_number: String,
    pub price: f64,
    pub dep_time: String,
    pub arr_time: String,
    pub origin: String,
    pub destination: String,
    pub date: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accommodation {
    pub name: String,
    pub city: String,
    /// Per night.
    pub price: f64,
    pub room_type: String,
    /// Free text such as `No parties & No smoking`.
    pub house_rules: String,
    pub minimum_nights: u32,
    pub maximum_occupancy: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Restaurant {
    pub name: String,
    pub city: String,
    /// Per person.
    pub average_cost: f64,
    /// Comma-separated cuisine names.
    pub cuisines: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attraction {
    pub name: String,
    pub city: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub origin: String,
    pub destination: String,
    /// `taxi` or `self-driving`.
    pub mode: String,
    pub duration: String,
    /// Per vehicle.
    pub cost: f64,
}

/// Manifest: table name to file path, relative to the manifest. Tables may
/// be CSV with a header row or a JSON array of objects.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub tables: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KnowledgeError {
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("{path}: record {record}: {reason}")]
    Schema {
        path: String,
        record: usize,
        reason: String,
    },
    #[error("unknown table `{0}`")]
    UnknownTable(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub flights: Vec<Flight>,
    pub accommodations: Vec<Accommodation>,
    pub restaurants: Vec<Restaurant>,
    pub attractions: Vec<Attraction>,
    pub distances: Vec<Distance>,
}

fn eq(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

fn load_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, KnowledgeError> {
    let shown = path.display().to_string();
    let io = |e: String| KnowledgeError::Io {
        path: shown.clone(),
        reason: e,
    };
    let is_json = path.extension().and_then(|e| e.to_str()) == Some("json");
    if is_json {
        let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        let values: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(|e| io(e.to_string()))?;
        values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                serde_json::from_value(v).map_err(|e| KnowledgeError::Schema {
                    path: shown.clone(),
                    record: i + 1,
                    reason: e.to_string(),
                })
            })
            .collect()
    } else {
        let mut reader = csv::Reader::from_path(path).map_err(|e| io(e.to_string()))?;
        reader
            .deserialize()
            .enumerate()
            .map(|(i, r)| {
                r.map_err(|e| KnowledgeError::Schema {
                    path: shown.clone(),
                    record: i + 1,
                    reason: e.to_string(),
                })
            })
            .collect()
    }
}

impl KnowledgeBase {
    pub fn load(manifest_path: &Path) -> Result<KnowledgeBase, KnowledgeError> {
        let shown = manifest_path.display().to_string();
        let text = std::fs::read_to_string(manifest_path).map_err(|e| KnowledgeError::Io {
            path: shown.clone(),
            reason: e.to_string(),
        })?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| KnowledgeError::Io {
            path: shown,
            reason: e.to_string(),
        })?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let mut kb = KnowledgeBase::default();
        for (name, rel) in &manifest.tables {
            let path = base.join(rel);
            match name.as_str() {
                "flights" => kb.flights = load_records(&path)?,
                "accommodations" => kb.accommodations = load_records(&path)?,
                "restaurants" => kb.restaurants = load_records(&path)?,
                "attractions" => kb.attractions = load_records(&path)?,
                "distances" => kb.distances = load_records(&path)?,
                other => return Err(KnowledgeError::UnknownTable(other.to_string())),
            }
        }
        Ok(kb)
    }

    pub fn is_empty(&self) -> bool {
        self.flights.is_empty()
            && self.accommodations.is_empty()
            && self.restaurants.is_empty()
            && self.attractions.is_empty()
            && self.distances.is_empty()
    }

    pub fn flight(&self, number: &str) -> Option<&Flight> {
        self.flights.iter().find(|f| eq(&f.flight_number, number))
    }

    pub fn accommodation(&self, name: &str, city: &str) -> Option<&Accommodation> {
        self.accommodations
            .iter()
            .find(|a| eq(&a.name, name) && eq(&a.city, city))
    }

    pub fn restaurant(&self, name: &str, city: &str) -> Option<&Restaurant> {
        self.restaurants.iter().find(|r| eq(&r.name, name) && eq(&r.city, city))
    }

    pub fn distance(&self, origin: &str, destination: &str, mode: &str) -> Option<&Distance> {
        self.distances
            .iter()
            .find(|d| eq(&d.origin, origin) && eq(&d.destination, destination) && eq(&d.mode, mode))
    }

    /// Records mentioning any of `tokens` (case-insensitive substring of any
    /// field), one JSON object per line prefixed by its table name. With no
    /// tokens every record qualifies. Output stops before exceeding
    /// `max_chars`, ending with a count of omitted records.
    pub fn excerpt(&self, tokens: &[&str], max_chars: usize) -> String {
        let tokens: Vec<String> = tokens
            .iter()
            .map(|t| t.trim().to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        let mut lines = Vec::new();
        let mut push = |table: &str, value: serde_json::Value| {
            let text = value.to_string();
            let lower = text.to_lowercase();
            if tokens.is_empty() || tokens.iter().any(|t| lower.contains(t.as_str())) {
                lines.push(format!("{table}: {text}"));
            }
        };
        for r in &self.flights {
            push("flights", json(r));
        }
        for r in &self.accommodations {
            push("accommodations", json(r));
        }
        for r in &self.restaurants {
            push("restaurants", json(r));
        }
        for r in &self.attractions {
            push("attractions", json(r));
        }
        for r in &self.distances {
            push("distances", json(r));
        }
        let mut out = String::new();
        for (i, line) in lines.iter().enumerate() {
            if out.len() + line.len() + 1 > max_chars {
                out.push_str(&format!("... ({} more records)\n", lines.len() - i));
                break;
            }
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

fn json<T: Serialize>(record: &T) -> serde_json::Value {
    serde_json::to_value(record).expect("record serializes")
}
