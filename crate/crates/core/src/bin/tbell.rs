fn main() {
    std::process::exit(tbell::cli::run(std::env::args_os()));
}
