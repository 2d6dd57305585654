fn main() {
    std::process::exit(mspc_cli::run(std::env::args_os()));
}
