fn main() {
    std::process::exit(dual_ascent::cli::run_cli(std::env::args_os()));
}
