fn main() {
    std::process::exit(shana::precision_harness::run_cli());
}
