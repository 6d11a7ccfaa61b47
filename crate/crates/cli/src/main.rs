fn main() {
    std::process::exit(mmuav_cli::run_cli(std::env::args_os()));
}
