fn main() {
    std::process::exit(mcmrb_cli::run(std::env::args_os()));
}
