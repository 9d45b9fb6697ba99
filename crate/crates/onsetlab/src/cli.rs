//! Command-line entry point (placeholder while modules land).

pub fn run_command(_argv: &[String]) -> i32 {
    eprintln!("onsetlab: not yet wired");
    1
}
