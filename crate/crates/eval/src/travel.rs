//! Day-by-day travel plans and constraint predicates over them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::knowledge::KnowledgeBase;
use crate::metrics::{ConstraintClass, ConstraintResult};

pub const FIELDS: [&str; 7] = [
    "Current City",
    "Transportation",
    "Breakfast",
    "Attraction",
    "Lunch",
    "Dinner",
    "Accommodation",
];

/// One day block. Empty entries hold `-`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayPlan {
    pub day: u32,
    pub current_city: String,
    pub transportation: String,
    pub breakfast: String,
    pub attraction: String,
    pub lunch: String,
    pub dinner: String,
    pub accommodation: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TravelPlan {
    pub days: Vec<DayPlan>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct TravelParseError {
    pub line: usize,
    pub reason: String,
}

fn is_empty_entry(v: &str) -> bool {
    let t = v.trim();
    t.is_empty() || t == "-"
}

/// Splits `Name, City` at the last comma; a trailing period is dropped.
pub fn split_place(entry: &str) -> Option<(&str, &str)> {
    let t = entry.trim().trim_end_matches('.').trim();
    if is_empty_entry(t) {
        return None;
    }
    let (name, city) = t.rsplit_once(',')?;
    Some((name.trim(), city.trim()))
}

impl DayPlan {
    fn fields(&self) -> [&String; 7] {
        [
            &self.current_city,
            &self.transportation,
            &self.breakfast,
            &self.attraction,
            &self.lunch,
            &self.dinner,
            &self.accommodation,
        ]
    }

    pub fn meals(&self) -> [&str; 3] {
        [&self.breakfast, &self.lunch, &self.dinner]
    }

    /// Attraction entries, separated by `;`.
    pub fn attractions(&self) -> Vec<&str> {
        self.attraction
            .split(';')
            .map(str::trim)
            .filter(|a| !is_empty_entry(a))
            .collect()
    }
}

impl TravelPlan {
    /// Parses `Day n:` blocks, each followed by the seven labelled lines in
    /// order. A leading `Travel Plan:` header and blank lines are skipped.
    pub fn parse(text: &str) -> Result<TravelPlan, TravelParseError> {
        let mut days = Vec::new();
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .peekable();
        if lines
            .peek()
            .is_some_and(|(_, l)| l.eq_ignore_ascii_case("travel plan:"))
        {
            lines.next();
        }
        while let Some((n, line)) = lines.next() {
            let err = |line: usize, reason: String| TravelParseError { line, reason };
            let day: u32 = line
                .strip_prefix("Day ")
                .and_then(|r| r.strip_suffix(':'))
                .and_then(|d| d.trim().parse().ok())
                .ok_or_else(|| err(n, format!("expected `Day n:`, got `{line}`")))?;
            if day as usize != days.len() + 1 {
                return Err(err(n, format!("day {day} out of sequence")));
            }
            let mut values = Vec::with_capacity(7);
            for label in FIELDS {
                let (m, l) = lines
                    .next()
                    .ok_or_else(|| err(n, format!("day {day} is missing `{label}`")))?;
                let value = l
                    .strip_prefix(label)
                    .and_then(|r| r.strip_prefix(':'))
                    .ok_or_else(|| err(m, format!("expected `{label}:`, got `{l}`")))?;
                let value = value.trim();
                values.push(if value.is_empty() {
                    "-".to_string()
                } else {
                    value.to_string()
                });
            }
            let mut v = values.into_iter();
            let mut next = || v.next().expect("seven values");
            days.push(DayPlan {
                day,
                current_city: next(),
                transportation: next(),
                breakfast: next(),
                attraction: next(),
                lunch: next(),
                dinner: next(),
                accommodation: next(),
            });
        }
        if days.is_empty() {
            return Err(TravelParseError {
                line: 0,
                reason: "no day blocks".into(),
            });
        }
        Ok(TravelPlan { days })
    }

    pub fn render(&self) -> String {
        let blocks: Vec<String> = self
            .days
            .iter()
            .map(|d| {
                let mut b = format!("Day {}:\n", d.day);
                for (label, value) in FIELDS.iter().zip(d.fields()) {
                    b.push_str(&format!("{label}: {value}\n"));
                }
                b
            })
            .collect();
        format!("Travel Plan:\n{}", blocks.join("\n"))
    }
}

/// Requirements attached to a travel query.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TravelQuery {
    pub days: u32,
    #[serde(default = "one")]
    pub people: u32,
    #[serde(default)]
    pub budget: Option<f64>,
    /// `entire room`, `private room`, `shared room` or `not shared room`.
    #[serde(default)]
    pub room_type: Option<String>,
    /// Activity the accommodation must allow, e.g. `smoking`, `pets`.
    #[serde(default)]
    pub house_rule: Option<String>,
    #[serde(default)]
    pub cuisines: Vec<String>,
    /// `no flight` or `no self-driving`.
    #[serde(default)]
    pub transportation: Option<String>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    Fail(String),
    NotApplicable,
}

pub trait Constraint: Send + Sync {
    fn name(&self) -> &'static str;
    fn class(&self) -> ConstraintClass;
    fn check(&self, plan: &TravelPlan, query: &TravelQuery, kb: &KnowledgeBase) -> Outcome;
}

fn fail_if(bad: Vec<String>) -> Outcome {
    if bad.is_empty() {
        Outcome::Pass
    } else {
        Outcome::Fail(bad.join("; "))
    }
}

/// Total spend must stay within the budget.
pub struct Budget;
/// Every accommodation has the requested room type.
pub struct RoomType;
/// Every accommodation allows the requested activity.
pub struct HouseRule;
/// Every requested cuisine is served at some meal.
pub struct CuisineCoverage;
/// No day uses an excluded means of transport.
pub struct TransportationPreference;
/// Consecutive nights at one accommodation meet its minimum stay.
pub struct MinimumStay;
/// No restaurant is used twice.
pub struct DiverseRestaurants;
/// No attraction is visited twice.
pub struct DiverseAttractions;

/// Cost of the whole plan; unknown items cost nothing.
pub fn plan_cost(plan: &TravelPlan, query: &TravelQuery, kb: &KnowledgeBase) -> f64 {
    let people = f64::from(query.people.max(1));
    let mut total = 0.0;
    for d in &plan.days {
        let t = d.transportation.trim();
        if let Some(rest) = t.strip_prefix("Flight Number:") {
            let number = rest.split(',').next().unwrap_or("").trim();
            if let Some(f) = kb.flight(number) {
                total += f.price * people;
            }
        } else if let Some((mode, from, to)) = ground_leg(t) {
            if let Some(dist) = kb.distance(from, to, mode) {
                let per_vehicle = if mode == "taxi" { 4.0 } else { 5.0 };
                total += dist.cost * (people / per_vehicle).ceil();
            }
        }
        for meal in d.meals() {
            if let Some((name, city)) = split_place(meal) {
                if let Some(r) = kb.restaurant(name, city) {
                    total += r.average_cost * people;
                }
            }
        }
        if let Some((name, city)) = split_place(&d.accommodation) {
            if let Some(a) = kb.accommodation(name, city) {
                let rooms = (people / f64::from(a.maximum_occupancy.max(1))).ceil();
                total += a.price * rooms;
            }
        }
    }
    total
}

/// `taxi, from A to B, ...` or `self-driving, from A to B, ...`.
fn ground_leg(entry: &str) -> Option<(&'static str, &str, &str)> {
    let lower = entry.to_lowercase();
    let mode = if lower.starts_with("taxi") {
        "taxi"
    } else if lower.starts_with("self-driving") {
        "self-driving"
    } else {
        return None;
    };
    let from_at = lower.find("from ")? + "from ".len();
    let rest = &entry[from_at..];
    let (from, after) = rest.split_once(" to ")?;
    let to = after.split(',').next()?.trim();
    Some((mode, from.trim(), to))
}

impl Constraint for Budget {
    fn name(&self) -> &'static str {
        "budget"
    }
    fn class(&self) -> ConstraintClass {
        ConstraintClass::Hard
    }
    fn check(&self, plan: &TravelPlan, query: &TravelQuery, kb: &KnowledgeBase) -> Outcome {
        let Some(budget) = query.budget else {
            return Outcome::NotApplicable;
        };
        let cost = plan_cost(plan, query, kb);
        if cost <= budget {
            Outcome::Pass
        } else {
            Outcome::Fail(format!("cost {cost} exceeds budget {budget}"))
        }
    }
}

fn accommodations<'a>(
    plan: &'a TravelPlan,
    kb: &'a KnowledgeBase,
) -> Vec<(&'a str, Option<&'a crate::knowledge::Accommodation>)> {
    plan.days
        .iter()
        .filter_map(|d| split_place(&d.accommodation).map(|(n, c)| (d.accommodation.as_str(), kb.accommodation(n, c))))
        .collect()
}

impl Constraint for RoomType {
    fn name(&self) -> &'static str {
        "room type"
    }
    fn class(&self) -> ConstraintClass {
        ConstraintClass::Hard
    }
    fn check(&self, plan: &TravelPlan, query: &TravelQuery, kb: &KnowledgeBase) -> Outcome {
        let Some(want) = query.room_type.as_deref().map(str::to_lowercase) else {
            return Outcome::NotApplicable;
        };
        let bad = accommodations(plan, kb)
            .into_iter()
            .filter(|(_, a)| {
                let Some(a) = a else { return true };
                let have = a.room_type.to_lowercase();
                match want.strip_prefix("not ") {
                    Some(excluded) => have == excluded,
                    None => have != want,
                }
            })
            .map(|(entry, _)| entry.to_string())
            .collect();
        fail_if(bad)
    }
}

impl Constraint for HouseRule {
    fn name(&self) -> &'static str {
        "house rule"
    }
    fn class(&self) -> ConstraintClass {
        ConstraintClass::Hard
    }
    fn check(&self, plan: &TravelPlan, query: &TravelQuery, kb: &KnowledgeBase) -> Outcome {
        let Some(rule) = query.house_rule.as_deref().map(str::to_lowercase) else {
            return Outcome::NotApplicable;
        };
        let forbidden = format!("no {rule}");
        let bad = accommodations(plan, kb)
            .into_iter()
            .filter(|(_, a)| a.is_none_or(|a| a.house_rules.to_lowercase().contains(&forbidden)))
            .map(|(entry, _)| entry.to_string())
            .collect();
        fail_if(bad)
    }
}

impl Constraint for CuisineCoverage {
    fn name(&self) -> &'static str {
        "cuisine"
    }
    fn class(&self) -> ConstraintClass {
        ConstraintClass::Hard
    }
    fn check(&self, plan: &TravelPlan, query: &TravelQuery, kb: &KnowledgeBase) -> Outcome {
        if query.cuisines.is_empty() {
            return Outcome::NotApplicable;
        }
        let mut served = BTreeSet::new();
        for d in &plan.days {
            for meal in d.meals() {
                if let Some(r) = split_place(meal).and_then(|(n, c)| kb.restaurant(n, c)) {
                    served.extend(r.cuisines.split(',').map(|c| c.trim().to_lowercase()));
                }
            }
        }
        let missing = query
            .cuisines
            .iter()
            .filter(|c| !served.contains(&c.trim().to_lowercase()))
            .map(|c| format!("no {c} meal"))
            .collect();
        fail_if(missing)
    }
}

impl Constraint for TransportationPreference {
    fn name(&self) -> &'static str {
        "transportation"
    }
    fn class(&self) -> ConstraintClass {
        ConstraintClass::Hard
    }
    fn check(&self, plan: &TravelPlan, query: &TravelQuery, _kb: &KnowledgeBase) -> Outcome {
        let Some(pref) = query.transportation.as_deref().map(str::to_lowercase) else {
            return Outcome::NotApplicable;
        };
        let Some(excluded) = pref.strip_prefix("no ") else {
            return Outcome::NotApplicable;
        };
        let bad = plan
            .days
            .iter()
            .filter(|d| d.transportation.to_lowercase().contains(excluded))
            .map(|d| format!("day {} uses {excluded}", d.day))
            .collect();
        fail_if(bad)
    }
}

impl Constraint for MinimumStay {
    fn name(&self) -> &'static str {
        "minimum stay"
    }
    fn class(&self) -> ConstraintClass {
        ConstraintClass::Commonsense
    }
    fn check(&self, plan: &TravelPlan, _query: &TravelQuery, kb: &KnowledgeBase) -> Outcome {
        let mut runs: Vec<(&str, u32)> = Vec::new();
        for d in &plan.days {
            if is_empty_entry(&d.accommodation) {
                runs.push(("", 0));
                continue;
            }
            match runs.last_mut() {
                Some((name, n)) if *name == d.accommodation.as_str() => *n += 1,
                _ => runs.push((&d.accommodation, 1)),
            }
        }
        let bad = runs
            .into_iter()
            .filter(|(name, _)| !name.is_empty())
            .filter_map(|(entry, nights)| {
                let (n, c) = split_place(entry)?;
                let a = kb.accommodation(n, c)?;
                (nights < a.minimum_nights).then(|| format!("{entry}: {nights} of {} nights", a.minimum_nights))
            })
            .collect();
        fail_if(bad)
    }
}

impl Constraint for DiverseRestaurants {
    fn name(&self) -> &'static str {
        "diverse restaurants"
    }
    fn class(&self) -> ConstraintClass {
        ConstraintClass::Commonsense
    }
    fn check(&self, plan: &TravelPlan, _query: &TravelQuery, _kb: &KnowledgeBase) -> Outcome {
        let mut seen = BTreeSet::new();
        let mut bad = Vec::new();
        for d in &plan.days {
            for meal in d.meals() {
                if let Some(place) = split_place(meal) {
                    if !seen.insert(place) {
                        bad.push(format!("{} repeated", meal.trim()));
                    }
                }
            }
        }
        fail_if(bad)
    }
}

impl Constraint for DiverseAttractions {
    fn name(&self) -> &'static str {
        "diverse attractions"
    }
    fn class(&self) -> ConstraintClass {
        ConstraintClass::Commonsense
    }
    fn check(&self, plan: &TravelPlan, _query: &TravelQuery, _kb: &KnowledgeBase) -> Outcome {
        let mut seen = BTreeSet::new();
        let mut bad = Vec::new();
        for d in &plan.days {
            for a in d.attractions() {
                let key = a.trim_end_matches('.').trim().to_lowercase();
                if !seen.insert(key) {
                    bad.push(format!("{a} repeated"));
                }
            }
        }
        fail_if(bad)
    }
}

/// The built-in predicate set.
pub fn builtin_constraints() -> Vec<Box<dyn Constraint>> {
    vec![
        Box::new(MinimumStay),
        Box::new(DiverseRestaurants),
        Box::new(DiverseAttractions),
        Box::new(Budget),
        Box::new(RoomType),
        Box::new(HouseRule),
        Box::new(CuisineCoverage),
        Box::new(TransportationPreference),
    ]
}

/// Runs every predicate; not-applicable ones are left out of the results.
pub fn check_travel_plan(
    plan: &TravelPlan,
    query: &TravelQuery,
    kb: &KnowledgeBase,
    constraints: &[Box<dyn Constraint>],
) -> Vec<ConstraintResult> {
    constraints
        .iter()
        .filter_map(|c| {
            let (passed, detail) = match c.check(plan, query, kb) {
                Outcome::Pass => (true, None),
                Outcome::Fail(why) => (false, Some(why)),
                Outcome::NotApplicable => return None,
            };
            Some(ConstraintResult {
                name: c.name().to_string(),
                class: c.class(),
                passed,
                detail,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{Accommodation, Distance, Flight, Restaurant};

    const TWO_DAYS: &str = "Travel Plan:\nDay 1:\nCurrent City: from A to B\nTransportation: Flight Number: F1, from A to B, Departure Time: 10:00, Arrival Time: 11:00\nBreakfast: -\nAttraction: Zoo, B.\nLunch: -\nDinner: Tasty, B\nAccommodation: Loft, B\n\nDay 2:\nCurrent City: from B to A\nTransportation: taxi, from B to A, duration: 1 hour\nBreakfast: Cafe, B\nAttraction: Museum, B;Park, B\nLunch: -\nDinner: -\nAccommodation: -\n";

    fn kb() -> KnowledgeBase {
        KnowledgeBase {
            flights: vec![Flight {
                flight_number: "F1".into(),
                price: 100.0,
                dep_time: "10:00".into(),
                arr_time: "11:00".into(),
                origin: "A".into(),
                destination: "B".into(),
                date: "2022-03-21".into(),
            }],
            accommodations: vec![Accommodation {
                name: "Loft".into(),
                city: "B".into(),
                price: 80.0,
                room_type: "Entire home/apt".into(),
                house_rules: "No smoking".into(),
                minimum_nights: 2,
                maximum_occupancy: 2,
            }],
            restaurants: vec![
                Restaurant {
                    name: "Tasty".into(),
                    city: "B".into(),
                    average_cost: 20.0,
                    cuisines: "Indian, Chinese".into(),
                },
                Restaurant {
                    name: "Cafe".into(),
                    city: "B".into(),
                    average_cost: 10.0,
                    cuisines: "Cafe".into(),
                },
            ],
            attractions: vec![],
            distances: vec![Distance {
                origin: "B".into(),
                destination: "A".into(),
                mode: "taxi".into(),
                duration: "1 hour".into(),
                cost: 50.0,
            }],
        }
    }

    #[test]
    fn parse_render_round_trip() {
        let plan = TravelPlan::parse(TWO_DAYS).unwrap();
        assert_eq!(plan.days.len(), 2);
        assert_eq!(plan.days[1].attractions(), ["Museum, B", "Park, B"]);
        assert_eq!(plan.render(), TWO_DAYS);
        assert!(TravelPlan::parse("Day 2:\nCurrent City: x").is_err());
        assert!(TravelPlan::parse("Day 1:\nCurrent City: x\nBreakfast: -").is_err());
        assert!(TravelPlan::parse("").is_err());
    }

    #[test]
    fn cost_arithmetic() {
        let plan = TravelPlan::parse(TWO_DAYS).unwrap();
        let q = TravelQuery {
            days: 2,
            people: 2,
            ..TravelQuery::default()
        };
        // flight 2*100, dinner 2*20, breakfast 2*10, one room 80, one taxi 50
        assert_eq!(plan_cost(&plan, &q, &kb()), 200.0 + 40.0 + 20.0 + 80.0 + 50.0);
    }

    #[test]
    fn predicates() {
        let plan = TravelPlan::parse(TWO_DAYS).unwrap();
        let mut q = TravelQuery {
            days: 2,
            people: 2,
            budget: Some(389.0),
            room_type: Some("not shared room".into()),
            house_rule: Some("smoking".into()),
            cuisines: vec!["Chinese".into(), "Italian".into()],
            transportation: Some("no self-driving".into()),
        };
        let results = check_travel_plan(&plan, &q, &kb(), &builtin_constraints());
        let verdict = |name: &str| results.iter().find(|r| r.name == name).map(|r| r.passed);
        assert_eq!(verdict("budget"), Some(false));
        assert_eq!(verdict("room type"), Some(true));
        assert_eq!(verdict("house rule"), Some(false));
        assert_eq!(verdict("cuisine"), Some(false));
        assert_eq!(verdict("transportation"), Some(true));
        assert_eq!(verdict("minimum stay"), Some(false));
        assert_eq!(verdict("diverse restaurants"), Some(true));
        assert_eq!(verdict("diverse attractions"), Some(true));
        q = TravelQuery {
            days: 2,
            ..TravelQuery::default()
        };
        let results = check_travel_plan(&plan, &q, &kb(), &builtin_constraints());
        assert_eq!(results.len(), 3, "hard predicates are not applicable");
    }
}
