fn main() {
    std::process::exit(dsbm::cli::run(std::env::args_os()));
}
