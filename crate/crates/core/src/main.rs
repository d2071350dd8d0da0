fn main() {
    std::process::exit(purenv::cli::run(std::env::args_os()));
}
