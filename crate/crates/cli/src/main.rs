fn main() {
    std::process::exit(bts_cli::run(std::env::args_os()));
}
