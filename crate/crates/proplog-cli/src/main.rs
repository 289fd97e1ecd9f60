fn main() {
    std::process::exit(proplog_cli::run_cli(std::env::args()));
}
