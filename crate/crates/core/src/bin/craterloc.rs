fn main() {
    std::process::exit(craterloc::cli::run(std::env::args_os()));
}
