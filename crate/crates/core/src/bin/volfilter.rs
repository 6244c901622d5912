fn main() {
    std::process::exit(volfilter::cli::run());
}
