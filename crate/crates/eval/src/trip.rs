//! Trip itineraries: `**Day i-j:** Visit City for n days` and
//! `**Day i:** Fly from A to B` lines.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TripSegment {
    /// `days` is the stated length, normally `end - start + 1`.
    Visit {
        city: String,
        start: u32,
        end: u32,
        days: u32,
    },
    Fly {
        from: String,
        to: String,
        day: u32,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripItinerary {
    pub segments: Vec<TripSegment>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct TripParseError {
    pub line: usize,
    pub reason: String,
}

fn line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:\*\*)?Day (\d+)(?:-(\d+))?:(?:\*\*)?\s*(.*?)\s*$").expect("day regex"))
}

fn visit_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^(?:arriving in (.+?) and visit (.+?)|visit (.+?)) for (\d+) days?\.?$").expect("visit regex")
    })
}

fn fly_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^fly from (.+?) to (.+?)\.?$").expect("fly regex"))
}

impl TripItinerary {
    /// Parses and validates an itinerary.
    pub fn parse(text: &str) -> Result<TripItinerary, TripParseError> {
        let it = Self::parse_lines(text)?;
        it.validate().map_err(|reason| TripParseError { line: 0, reason })?;
        Ok(it)
    }

    /// Grammar-only parse. A leading `Trip Plan:` header and blank lines are
    /// skipped; every other line must be a day line.
    pub fn parse_lines(text: &str) -> Result<TripItinerary, TripParseError> {
        let mut segments = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |reason: String| TripParseError { line: i + 1, reason };
            if line.is_empty() || (segments.is_empty() && line.eq_ignore_ascii_case("trip plan:")) {
                continue;
            }
            let c = line_re()
                .captures(line)
                .ok_or_else(|| err(format!("not a day line: `{line}`")))?;
            let start: u32 = c[1].parse().map_err(|_| err("bad day number".into()))?;
            let end: Option<u32> = match c.get(2) {
                Some(m) => Some(m.as_str().parse().map_err(|_| err("bad day number".into()))?),
                None => None,
            };
            let body = &c[3];
            if let Some(v) = visit_re().captures(body) {
                let city = match (v.get(1), v.get(2), v.get(3)) {
                    (Some(a), Some(b), _) if a.as_str() != b.as_str() => {
                        return Err(err(format!("arrives in {} but visits {}", a.as_str(), b.as_str())))
                    }
                    (_, Some(b), _) => b.as_str(),
                    (_, _, Some(c)) => c.as_str(),
                    _ => unreachable!("visit regex has a city"),
                };
                let days: u32 = v[4].parse().map_err(|_| err("bad day count".into()))?;
                segments.push(TripSegment::Visit {
                    city: city.trim().to_string(),
                    start,
                    end: end.unwrap_or(start),
                    days,
                });
            } else if let Some(f) = fly_re().captures(body) {
                if end.is_some_and(|e| e != start) {
                    return Err(err("a flight takes a single day".into()));
                }
                segments.push(TripSegment::Fly {
                    from: f[1].trim().to_string(),
                    to: f[2].trim().to_string(),
                    day: start,
                });
            } else {
                return Err(err(format!("unrecognised day entry `{body}`")));
            }
        }
        Ok(TripItinerary { segments })
    }

    /// Days are positive and ranges ordered; each visit spans its stated
    /// length; consecutive visits share their boundary day; each flight sits
    /// on the boundary between the visits it connects.
    pub fn validate(&self) -> Result<(), String> {
        if self.segments.is_empty() {
            return Err("itinerary is empty".into());
        }
        let mut last_visit: Option<(&str, u32)> = None;
        let mut pending_fly: Option<(&str, &str, u32)> = None;
        for seg in &self.segments {
            match seg {
                TripSegment::Visit { city, start, end, days } => {
                    if *start == 0 || end < start {
                        return Err(format!("invalid day range {start}-{end}"));
                    }
                    if end - start + 1 != *days {
                        return Err(format!("Day {start}-{end} does not span {days} days"));
                    }
                    if let Some((prev, prev_end)) = last_visit {
                        if *start != prev_end {
                            return Err(format!(
                                "{city} starts on day {start}, previous visit ends on day {prev_end}"
                            ));
                        }
                        match pending_fly.take() {
                            Some((from, to, day)) => {
                                if from != prev || to != city || day != *start {
                                    return Err(format!(
                                        "flight {from} to {to} on day {day} does not connect {prev} and {city}"
                                    ));
                                }
                            }
                            None if prev != city => return Err(format!("no flight from {prev} to {city}")),
                            None => {}
                        }
                    } else if pending_fly.is_some() {
                        return Err("itinerary starts with a flight".into());
                    }
                    last_visit = Some((city, *end));
                }
                TripSegment::Fly { from, to, day } => {
                    if *day == 0 {
                        return Err("day numbers start at 1".into());
                    }
                    if pending_fly.is_some() {
                        return Err("two flights in a row".into());
                    }
                    pending_fly = Some((from, to, *day));
                }
            }
        }
        if pending_fly.is_some() {
            return Err("itinerary ends with a flight".into());
        }
        Ok(())
    }

    pub fn visits(&self) -> Vec<(&str, u32, u32)> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                TripSegment::Visit { city, start, end, .. } => Some((city.as_str(), *start, *end)),
                TripSegment::Fly { .. } => None,
            })
            .collect()
    }

    /// Renders in the canonical layout; the first visit uses the
    /// `Arriving in` form.
    pub fn render(&self) -> String {
        let mut out = String::from("Trip Plan:\n");
        let mut first = true;
        for seg in &self.segments {
            match seg {
                TripSegment::Visit {
                    city,
                    start,
                    end,
                    days: n,
                } => {
                    let range = if start == end {
                        format!("{start}")
                    } else {
                        format!("{start}-{end}")
                    };
                    if first {
                        out.push_str(&format!(
                            "**Day {range}:** Arriving in {city} and visit {city} for {n} days.\n"
                        ));
                        first = false;
                    } else {
                        out.push_str(&format!("**Day {range}:** Visit {city} for {n} days.\n"));
                    }
                }
                TripSegment::Fly { from, to, day } => {
                    out.push_str(&format!("**Day {day}:** Fly from {from} to {to}.\n"));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripMatch {
    /// Whole-plan verdict: the visit sets are equal.
    pub matched: bool,
    /// The candidate did not parse.
    pub format_failure: bool,
    /// Gold visits reproduced exactly (city and day range).
    pub matching_visits: usize,
    pub gold_visits: usize,
}

impl TripMatch {
    /// Per-visit partial credit.
    pub fn partial(&self) -> f64 {
        if self.gold_visits == 0 {
            0.0
        } else {
            self.matching_visits as f64 / self.gold_visits as f64
        }
    }
}

type VisitKey = (String, u32, u32, u32);

fn visit_counts(it: &TripItinerary) -> BTreeMap<VisitKey, usize> {
    let mut counts = BTreeMap::new();
    for seg in &it.segments {
        if let TripSegment::Visit { city, start, end, days } = seg {
            *counts.entry((city.to_lowercase(), *start, *end, *days)).or_default() += 1;
        }
    }
    counts
}

/// Matches candidate text against a gold itinerary: every visit's city, day
/// range and stated length must agree, in any order, with no extra or
/// missing visits. City names compare case-insensitively; flight lines are
/// not scored. Only the line grammar is required of the candidate; an
/// inconsistent candidate simply mismatches.
pub fn match_trip(candidate: &str, gold: &TripItinerary) -> TripMatch {
    let gold_counts = visit_counts(gold);
    let gold_visits = gold.visits().len();
    let Ok(cand) = TripItinerary::parse_lines(candidate) else {
        return TripMatch {
            matched: false,
            format_failure: true,
            matching_visits: 0,
            gold_visits,
        };
    };
    let cand_counts = visit_counts(&cand);
    let matching_visits = gold_counts
        .iter()
        .map(|(k, n)| (*n).min(cand_counts.get(k).copied().unwrap_or(0)))
        .sum();
    TripMatch {
        matched: gold_counts == cand_counts,
        format_failure: false,
        matching_visits,
        gold_visits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLAN: &str = "Trip Plan:\n**Day 1-2:** Arriving in Tallinn and visit Tallinn for 2 days.\n**Day 2:** Fly from Tallinn to Berlin.\n**Day 2-5:** Visit Berlin for 4 days.\n**Day 5:** Fly from Berlin to Venice.\n**Day 5-7:** Visit Venice for 3 days.\n";

    #[test]
    fn parse_and_render() {
        let it = TripItinerary::parse(PLAN).unwrap();
        assert_eq!(it.segments.len(), 5);
        assert_eq!(it.visits(), [("Tallinn", 1, 2), ("Berlin", 2, 5), ("Venice", 5, 7)]);
        assert_eq!(it.render(), PLAN);
    }

    #[test]
    fn lenient_spelling() {
        let it = TripItinerary::parse(
            "Day 1-3: Visit Rome for 3 days\n**Day 3:** Fly from Rome to Oslo\n**Day 3-4:** Visit Oslo for 2 day.",
        )
        .unwrap();
        assert_eq!(it.visits().len(), 2);
    }

    #[test]
    fn stated_length_must_agree() {
        let gold = TripItinerary::parse(PLAN).unwrap();
        let contradictory = PLAN.replace("visit Tallinn for 2 days", "visit Tallinn for 1 days");
        let m = match_trip(&contradictory, &gold);
        assert!(!m.matched && !m.format_failure);
        assert_eq!(m.matching_visits, 2);
    }

    #[test]
    fn invalid_ranges() {
        assert!(TripItinerary::parse("**Day 3-1:** Visit Rome for 3 days.").is_err());
        assert!(TripItinerary::parse("**Day 1-3:** Visit Rome for 2 days.").is_err());
        assert!(
            TripItinerary::parse("**Day 1-2:** Visit Rome for 2 days.\n**Day 3-4:** Visit Oslo for 2 days.").is_err()
        );
        assert!(
            TripItinerary::parse("**Day 1-2:** Visit Rome for 2 days.\n**Day 2:** Fly from Rome to Oslo.").is_err()
        );
        assert!(TripItinerary::parse("").is_err());
        assert!(TripItinerary::parse("hello").is_err());
    }

    #[test]
    fn matching() {
        let gold = TripItinerary::parse(PLAN).unwrap();
        assert!(match_trip(PLAN, &gold).matched);
        let shifted = PLAN.replace(
            "Day 2-5:** Visit Berlin for 4 days",
            "Day 2-6:** Visit Berlin for 5 days",
        );
        let m = match_trip(&shifted, &gold);
        assert!(!m.matched);
        let missing = "**Day 1-2:** Visit Tallinn for 2 days.\n**Day 2:** Fly from Tallinn to Berlin.\n**Day 2-5:** Visit Berlin for 4 days.";
        let m = match_trip(missing, &gold);
        assert!(!m.matched && !m.format_failure);
        assert_eq!(m.matching_visits, 2);
        assert!((m.partial() - 2.0 / 3.0).abs() < 1e-12);
        let m = match_trip("garbage", &gold);
        assert!(m.format_failure && !m.matched);
    }
}
