fn main() {
    std::process::exit(rmusic_harness::cli::run(std::env::args_os()));
}
