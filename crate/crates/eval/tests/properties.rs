use htp_eval::{
    aggregate_metrics, match_trip, ConstraintClass, ConstraintResult, PlanVerdict, Rate, TripItinerary, TripSegment,
};
use proptest::prelude::*;

const CITIES: [&str; 8] = [
    "Rome", "Oslo", "Berlin", "Venice", "Tallinn", "Porto", "Vienna", "Split",
];

fn itinerary() -> impl Strategy<Value = TripItinerary> {
    prop::collection::vec((0..CITIES.len(), 1u32..6), 1..6).prop_map(|stays| {
        let mut segments = Vec::new();
        let mut day = 1;
        let mut prev: Option<&str> = None;
        for (i, (c, len)) in stays.into_iter().enumerate() {
            // consecutive cities must differ for the flight to make sense
            let mut city = CITIES[c];
            if prev == Some(city) {
                city = CITIES[(c + 1 + i) % CITIES.len()];
                if prev == Some(city) {
                    city = CITIES[(c + 2 + i) % CITIES.len()];
                }
            }
            if let Some(p) = prev {
                segments.push(TripSegment::Fly {
                    from: p.into(),
                    to: city.into(),
                    day,
                });
            }
            segments.push(TripSegment::Visit {
                city: city.into(),
                start: day,
                end: day + len - 1,
                days: len,
            });
            day += len - 1;
            prev = Some(city);
        }
        TripItinerary { segments }
    })
}

fn verdict(delivered: bool, commonsense: &[bool], hard: &[bool]) -> PlanVerdict {
    let mut results = Vec::new();
    for (class, flags) in [
        (ConstraintClass::Commonsense, commonsense),
        (ConstraintClass::Hard, hard),
    ] {
        for (i, &passed) in flags.iter().enumerate() {
            results.push(ConstraintResult {
                name: format!("{class:?}-{i}"),
                class,
                passed,
                detail: None,
            });
        }
    }
    PlanVerdict {
        id: String::new(),
        delivered,
        results,
    }
}

/// Verdict sets where every plan carries the same number of checks per class.
fn uniform_verdicts() -> impl Strategy<Value = Vec<PlanVerdict>> {
    (1usize..5, 1usize..4).prop_flat_map(|(c, h)| {
        prop::collection::vec(
            (
                any::<bool>(),
                prop::collection::vec(any::<bool>(), c),
                prop::collection::vec(any::<bool>(), h),
            ),
            1..20,
        )
        .prop_map(|rows| rows.into_iter().map(|(d, cs, hs)| verdict(d, &cs, &hs)).collect())
    })
}

proptest! {
    #[test]
    fn trip_render_parse_roundtrip(it in itinerary()) {
        let text = it.render();
        let back = TripItinerary::parse(&text).unwrap();
        prop_assert_eq!(&back, &it);
        let m = match_trip(&text, &it);
        prop_assert!(m.matched);
        prop_assert_eq!(m.matching_visits, m.gold_visits);
    }

    #[test]
    fn trip_perturbation_breaks_match(it in itinerary(), pick in any::<prop::sample::Index>(), shift in 1u32..3) {
        let mut bad = it.clone();
        let visits: Vec<usize> = bad.segments.iter().enumerate()
            .filter(|(_, s)| matches!(s, TripSegment::Visit { .. }))
            .map(|(i, _)| i)
            .collect();
        let i = visits[pick.index(visits.len())];
        if let TripSegment::Visit { end, days, .. } = &mut bad.segments[i] {
            *end += shift;
            *days += shift;
        }
        let m = match_trip(&bad.render(), &it);
        prop_assert!(!m.matched);
        prop_assert!(!m.format_failure);
        prop_assert_eq!(m.matching_visits, m.gold_visits - 1);
    }

    #[test]
    fn metric_bounds(verdicts in uniform_verdicts()) {
        let m = aggregate_metrics(&verdicts).unwrap();
        let one = Rate::new(1, 1);
        for r in [m.delivery_rate, m.commonsense_micro, m.commonsense_macro, m.hard_micro, m.hard_macro, m.success_rate] {
            prop_assert!(r <= one);
        }
        prop_assert!(m.commonsense_macro <= m.commonsense_micro);
        prop_assert!(m.hard_macro <= m.hard_micro);
        prop_assert!(m.success_rate <= m.commonsense_macro.min(m.hard_macro));
        prop_assert!(m.success_rate <= m.delivery_rate);
    }

    #[test]
    fn metrics_ignore_order(mut verdicts in uniform_verdicts()) {
        let before = aggregate_metrics(&verdicts).unwrap();
        verdicts.reverse();
        prop_assert_eq!(aggregate_metrics(&verdicts).unwrap(), before);
    }
}

#[test]
fn macro_can_exceed_micro_with_uneven_counts() {
    let v = [verdict(true, &[true], &[]), verdict(true, &[false; 5], &[])];
    let m = aggregate_metrics(&v).unwrap();
    assert_eq!(m.commonsense_micro, Rate::new(1, 6));
    assert_eq!(m.commonsense_macro, Rate::new(1, 2));
    assert!(m.commonsense_macro > m.commonsense_micro);
}
