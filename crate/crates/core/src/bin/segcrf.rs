fn main() {
    std::process::exit(segcrf::cli::run(std::env::args_os()));
}
