fn main() {
    std::process::exit(intellichain_cli::run_cli(std::env::args_os()));
}
