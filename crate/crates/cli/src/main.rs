fn main() {
    std::process::exit(halfband_cli::run(std::env::args()));
}
