fn main() {
    std::process::exit(tigre_cli::run_cli(std::env::args_os()));
}
