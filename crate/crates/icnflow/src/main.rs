fn main() {
    std::process::exit(icnflow::cli::run());
}
