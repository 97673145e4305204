//! Command-line frontend for the tentacle rod simulator.

fn main() {
    eprintln!("tentacle: not yet implemented");
    std::process::exit(1);
}
