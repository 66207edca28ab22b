//! JSONL benchmark datasets, one instance per line.
//!
//! | benchmark       | fields                                                                  |
//! |-----------------|-------------------------------------------------------------------------|
//! | `blocksworld`   | `id?`, `query`, `init` and `goal` as atom lists (`on(a,b)`, `ontable(a)`) |
//! | `mystery`       | `id?`, `query`, `init` and `goal` as fact lists (`craves(a,b)`), `objects?` |
//! | `trip`          | `id?`, `query`, `gold` itinerary text                                   |
//! | `travelplanner` | `id?`, `query`, `days`, `people?`, `budget?`, `room_type?`, `house_rule?`, `cuisines?`, `transportation?`, `knowledge?` manifest path relative to the dataset |
//!
//! Missing ids default to the 1-based line number.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::blocks::{BlocksAtom, BlocksState};
use crate::mystery::{MysteryFact, MysteryState};
use crate::travel::TravelQuery;
use crate::trip::TripItinerary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    TravelPlanner,
    Blocksworld,
    Mystery,
    Trip,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] = [
        Benchmark::TravelPlanner,
        Benchmark::Blocksworld,
        Benchmark::Mystery,
        Benchmark::Trip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::TravelPlanner => "travelplanner",
            Benchmark::Blocksworld => "blocksworld",
            Benchmark::Mystery => "mystery",
            Benchmark::Trip => "trip",
        }
    }

    pub fn plan_format(self) -> PlanFormat {
        match self {
            Benchmark::TravelPlanner => PlanFormat::TravelPlannerDays,
            Benchmark::Blocksworld | Benchmark::Mystery => PlanFormat::BlocksPlan,
            Benchmark::Trip => PlanFormat::TripPlan,
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown benchmark `{s}` (expected travelplanner, blocksworld, mystery or trip)"))
    }
}

/// Final-plan text formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlanFormat {
    TravelPlannerDays,
    BlocksPlan,
    TripPlan,
}

impl PlanFormat {
    /// Instructions placed in the plan-generation prompt.
    pub fn instructions(self) -> &'static str {
        match self {
            PlanFormat::TravelPlannerDays => {
                "Start with `Travel Plan:`. For each day write `Day n:` followed by the lines Current City, Transportation, Breakfast, Attraction, Lunch, Dinner and Accommodation, each as `Label: value`, using `-` for an empty entry. Separate days with a blank line."
            }
            PlanFormat::BlocksPlan => {
                "Write `[PLAN]` on its own line, then one action per line, then `[PLAN END]`."
            }
            PlanFormat::TripPlan => {
                "Start with `Trip Plan:`. Write one line per stay, `**Day i-j:** Visit City for n days.`, and one line per flight, `**Day i:** Fly from A to B.`"
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "benchmark", rename_all = "lowercase")]
pub enum InstanceSpec {
    Blocksworld {
        init: BlocksState,
        goal: Vec<BlocksAtom>,
    },
    Mystery {
        init: MysteryState,
        goal: Vec<MysteryFact>,
    },
    Trip {
        gold: TripItinerary,
    },
    TravelPlanner {
        requirements: TravelQuery,
        knowledge: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub id: String,
    pub query: String,
    pub spec: InstanceSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("{0}")]
    Io(String),
    #[error("line {line}: {reason}")]
    Schema { line: usize, reason: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlocksRow {
    id: Option<String>,
    query: String,
    init: Vec<String>,
    goal: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MysteryRow {
    id: Option<String>,
    query: String,
    init: Vec<String>,
    goal: Vec<String>,
    #[serde(default)]
    objects: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TripRow {
    id: Option<String>,
    query: String,
    gold: String,
}

#[derive(Deserialize)]
struct TravelRow {
    id: Option<String>,
    query: String,
    knowledge: Option<PathBuf>,
    #[serde(flatten)]
    requirements: TravelQuery,
}

fn parse_row(benchmark: Benchmark, line: &str, base: &Path) -> Result<(Option<String>, String, InstanceSpec), String> {
    let json = |e: serde_json::Error| e.to_string();
    Ok(match benchmark {
        Benchmark::Blocksworld => {
            let r: BlocksRow = serde_json::from_str(line).map_err(json)?;
            let init: Vec<BlocksAtom> = r
                .init
                .iter()
                .map(|a| BlocksAtom::parse(a))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let goal = r
                .goal
                .iter()
                .map(|a| BlocksAtom::parse(a))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let init = BlocksState::from_atoms(&init).map_err(|e| e.to_string())?;
            (r.id, r.query, InstanceSpec::Blocksworld { init, goal })
        }
        Benchmark::Mystery => {
            let r: MysteryRow = serde_json::from_str(line).map_err(json)?;
            let init: Vec<MysteryFact> = r
                .init
                .iter()
                .map(|a| MysteryFact::parse(a))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let goal = r
                .goal
                .iter()
                .map(|a| MysteryFact::parse(a))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let init = MysteryState::from_facts(&init, &r.objects);
            (r.id, r.query, InstanceSpec::Mystery { init, goal })
        }
        Benchmark::Trip => {
            let r: TripRow = serde_json::from_str(line).map_err(json)?;
            let gold = TripItinerary::parse(&r.gold).map_err(|e| format!("gold itinerary: {}", e.reason))?;
            (r.id, r.query, InstanceSpec::Trip { gold })
        }
        Benchmark::TravelPlanner => {
            let r: TravelRow = serde_json::from_str(line).map_err(json)?;
            if r.requirements.days == 0 {
                return Err("days must be positive".into());
            }
            let knowledge = r.knowledge.map(|k| base.join(k));
            (
                r.id,
                r.query,
                InstanceSpec::TravelPlanner {
                    requirements: r.requirements,
                    knowledge,
                },
            )
        }
    })
}

/// Loads and validates every line; the first bad line aborts with its
/// number.
pub fn load_dataset(path: &Path, benchmark: Benchmark) -> Result<Vec<Instance>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(&text, benchmark, path.parent().unwrap_or(Path::new(".")))
}

/// Like [`load_dataset`] over in-memory text; relative knowledge paths
/// resolve against `base`.
pub fn parse_dataset(text: &str, benchmark: Benchmark, base: &Path) -> Result<Vec<Instance>, DatasetError> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |reason: String| DatasetError::Schema { line: line_no, reason };
        let (id, query, spec) = parse_row(benchmark, line, base).map_err(schema)?;
        if query.trim().is_empty() {
            return Err(schema("query is empty".into()));
        }
        let id = id.unwrap_or_else(|| line_no.to_string());
        if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
            return Err(schema(format!("id `{id}` cannot name a directory")));
        }
        if !ids.insert(id.clone()) {
            return Err(schema(format!("duplicate id `{id}`")));
        }
        out.push(Instance { id, query, spec });
    }
    Ok(out)
}
