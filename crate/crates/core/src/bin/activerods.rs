fn main() {
    std::process::exit(activerods::harness::cli::run(std::env::args_os()));
}
