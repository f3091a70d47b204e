mod common;

#[test]
fn tally_table_matches_published_rows() {
    common::tally_table().unwrap();
}

#[test]
fn immune_brute_force_matches_closed_form() {
    common::immune_oracle().unwrap();
}

#[test]
fn round_robin_within_two_n_exchanges() {
    common::round_robin_bound().unwrap();
}

#[test]
fn recovery_labels_trunk_and_disputed_events() {
    common::recovery_labels().unwrap();
}

#[test]
fn codec_round_trips_and_lengths() {
    common::codec_suite(10_000).unwrap();
}

#[test]
fn mutated_rotations_are_rejected() {
    common::prerotation_fuzz(1_000).unwrap();
}

#[test]
fn weighted_thresholds_match_rational_oracle() {
    common::weighted_oracle().unwrap();
}

#[test]
fn key_indices_are_partial_sums() {
    common::key_index_law(100).unwrap();
}
