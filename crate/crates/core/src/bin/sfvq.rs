fn main() {
    std::process::exit(sfvq::cli::run(std::env::args_os()));
}
