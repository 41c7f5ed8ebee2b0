fn main() {
    std::process::exit(tracelab::cli::run(std::env::args_os()));
}
