fn main() {
    std::process::exit(svfix_cli::run(std::env::args_os()));
}
