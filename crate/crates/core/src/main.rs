fn main() {
    std::process::exit(levy_avg::cli::cli_main(std::env::args_os()));
}
