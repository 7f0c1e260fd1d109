mod common;

use common::*;

fn ok(check: Check) {
    match check {
        Ok(summary) => eprintln!("{summary}"),
        Err(msg) => panic!("{msg}"),
    }
}

#[test]
fn components_match_flood_fill() {
    ok(check_components(100, 11));
}

#[test]
fn dp_matches_brute_force() {
    ok(check_dp_exactness(200, 12));
}

#[test]
fn dp_dominates_constant_assignments() {
    ok(check_dp_dominance(200, 13));
}

#[test]
fn gradient_matches_finite_differences() {
    ok(check_gradient(50, 14));
}

#[test]
fn ignore_pixels_have_no_effect() {
    ok(check_ignore_semantics(30, 15));
}

#[test]
fn memories_match_sort_and_fifo_oracles() {
    ok(check_queues(100, 16));
}

#[test]
fn batch_selection_matches_replay() {
    ok(check_batch_traces(50, 17));
}

#[test]
fn online_memory_matches_replay() {
    ok(check_online_traces(50, 18));
}
