fn main() {
    std::process::exit(optolev::cli::run());
}
