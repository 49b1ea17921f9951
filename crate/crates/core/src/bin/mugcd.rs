fn main() {
    std::process::exit(mugcd::cli::main_with_args(std::env::args_os()));
}
