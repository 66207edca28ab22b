use htp_gateway::{parse_reply, ModelRequest, Payload, Role};
use proptest::prelude::*;

proptest! {
    #[test]
    fn index_replies_are_one_based(n in 1usize..10_000, tail in "[a-z ]{0,20}") {
        let raw = format!("{n}\n{tail}");
        prop_assert_eq!(parse_reply(Role::SelectNode, &raw), Ok(Payload::Index(n - 1)));
    }

    #[test]
    fn index_lists_keep_first_occurrences(list in prop::collection::vec(1usize..20, 1..8)) {
        let raw = list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ");
        let mut expected = Vec::new();
        for n in &list {
            if !expected.contains(&(n - 1)) {
                expected.push(n - 1);
            }
        }
        prop_assert_eq!(parse_reply(Role::FilterChains, &raw), Ok(Payload::Indices(expected)));
    }

    #[test]
    fn keys_ignore_slot_order(slots in prop::collection::btree_map("[a-z]{1,6}", ".{0,12}", 0..6)) {
        let forward = slots.iter().fold(ModelRequest::new(Role::RefineNode), |r, (k, v)| r.slot(k, v));
        let backward = slots.iter().rev().fold(ModelRequest::new(Role::RefineNode), |r, (k, v)| r.slot(k, v));
        prop_assert_eq!(forward.key(0, "m"), backward.key(0, "m"));
        prop_assert_ne!(forward.key(0, "m"), forward.key(1, "m"));
    }
}
