fn main() {
    std::process::exit(curvelab::cli::run(std::env::args_os()));
}
