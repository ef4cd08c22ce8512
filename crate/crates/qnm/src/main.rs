fn main() {
    std::process::exit(qnm::cli::run());
}
