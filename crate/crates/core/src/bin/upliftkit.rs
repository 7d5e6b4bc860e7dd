fn main() {
    std::process::exit(upliftkit::cli::run(std::env::args_os()));
}
