fn main() {
    std::process::exit(hlgauge_cli::run(std::env::args_os()));
}
