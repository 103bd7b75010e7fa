fn main() {
    std::process::exit(spatfun_core::runner::cli::run_cli(std::env::args_os()));
}
