fn main() {
    tactile_nav_cli::init_logging();
    std::process::exit(tactile_nav_cli::run_from_args(std::env::args_os()));
}
