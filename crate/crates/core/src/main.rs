fn main() {
    std::process::exit(revarg::cli::run(std::env::args_os()));
}
