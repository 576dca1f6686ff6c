fn main() {
    std::process::exit(bluebus_cli::run(std::env::args_os()));
}
