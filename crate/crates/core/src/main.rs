fn main() {
    std::process::exit(lacuna::cli::main_with_args(std::env::args_os()));
}
