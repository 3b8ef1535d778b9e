fn main() {
    std::process::exit(fieldcomm::cli::run(std::env::args()));
}
