fn main() {
    std::process::exit(acmpc_cli::run(std::env::args_os()));
}
