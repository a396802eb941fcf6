fn main() {
    std::process::exit(fds_cli::run_cli(std::env::args_os()));
}
