fn main() {
    std::process::exit(relay_cli::run_cli(std::env::args_os()));
}
