fn main() {
    std::process::exit(isgns::cli::run());
}
