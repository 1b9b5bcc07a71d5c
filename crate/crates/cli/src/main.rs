fn main() {
    std::process::exit(anomap_cli::run(std::env::args_os()));
}
