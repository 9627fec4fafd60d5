fn main() {
    std::process::exit(ndewg_cli::main_with_args(std::env::args_os()));
}
