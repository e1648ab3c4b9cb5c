//! Swap requests racing with event producers on other threads must behave as
//! if the swap happened after the inbox was drained.

mod common;

#[test]
fn racing_swaps_match_quiescent_swaps() {
    let schedules = 1000;
    assert_eq!(common::schedule::racing_schedules(0xa70, schedules), schedules);
}
