fn main() {
    std::process::exit(hedgerate::cli_io::run_command(std::env::args_os()));
}
