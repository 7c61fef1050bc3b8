fn main() {
    std::process::exit(matcha::cli::run());
}
