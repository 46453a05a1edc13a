fn main() {
    std::process::exit(ghrelax_harness::cli::run(std::env::args_os()));
}
