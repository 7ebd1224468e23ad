fn main() {
    std::process::exit(surnames::cli::run(std::env::args_os()));
}
