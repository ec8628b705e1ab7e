fn main() {
    std::process::exit(besov_contract::cli::run(std::env::args_os()));
}
