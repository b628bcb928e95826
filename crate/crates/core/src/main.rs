fn main() {
    std::process::exit(penfbm::cli::run_cli(std::env::args_os()));
}
