fn main() {
    std::process::exit(dynsel::cli::run(std::env::args_os()));
}
