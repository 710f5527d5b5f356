fn main() {
    std::process::exit(gaussbatt::cli::run());
}
