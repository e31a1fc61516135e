fn main() {
    std::process::exit(derham_range::run_from_args());
}
