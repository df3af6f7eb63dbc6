fn main() {
    std::process::exit(orcu::cli::run(std::env::args_os()));
}
