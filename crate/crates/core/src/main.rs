fn main() {
    std::process::exit(weil_core::cli::main_with_args(std::env::args_os()));
}
