fn main() {
    std::process::exit(telecast::cli::run(std::env::args_os()));
}
