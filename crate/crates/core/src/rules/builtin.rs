//! The four shipped rule libraries.

pub const TRAVELPLANNER: &str = include_str!("../../libraries/travelplanner.htl");
pub const BLOCKSWORLD: &str = include_str!("../../libraries/blocksworld.htl");
pub const MYSTERY: &str = include_str!("../../libraries/mystery.htl");
pub const TRIP: &str = include_str!("../../libraries/trip.htl");

/// `(name, source)` pairs.
pub const ALL: [(&str, &str); 4] = [
    ("travelplanner", TRAVELPLANNER),
    ("blocksworld", BLOCKSWORLD),
    ("mystery", MYSTERY),
    ("trip", TRIP),
];

pub fn by_name(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
