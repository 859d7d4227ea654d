fn main() {
    std::process::exit(jdot::cli::run(std::env::args_os()));
}
