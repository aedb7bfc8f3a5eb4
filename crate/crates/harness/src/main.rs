fn main() {
    std::process::exit(bdris_harness::cli::cli_main(std::env::args_os()));
}
