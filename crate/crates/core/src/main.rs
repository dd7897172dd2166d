fn main() {
    std::process::exit(covlab::harness::cli::cli_main(std::env::args_os()));
}
