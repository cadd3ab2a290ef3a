fn main() {
    std::process::exit(csi_sentry::cli::run_cli(std::env::args_os()));
}
