fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(onsetlab::cli::run_command(&args));
}
