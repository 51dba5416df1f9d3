fn main() {
    std::process::exit(subwalk_cli::run(std::env::args_os()));
}
