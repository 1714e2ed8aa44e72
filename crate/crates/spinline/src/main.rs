fn main() {
    std::process::exit(spinline::cli::run(std::env::args_os()));
}
