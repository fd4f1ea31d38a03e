fn main() {
    std::process::exit(dufloq::cli::run());
}
