//! Acceptance gate: one pass/fail line per criterion.
//!
//! Placeholder harness; filled in once the solver stack is complete.

fn main() {
    println!("acceptance: no criteria registered yet");
}
