fn main() {
    std::process::exit(lapse_cli::main_with_args(std::env::args_os()));
}
