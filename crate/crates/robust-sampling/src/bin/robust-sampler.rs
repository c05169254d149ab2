fn main() {
    std::process::exit(robust_sampling::cli::cli_main(std::env::args_os()));
}
