fn main() {
    std::process::exit(talseg::cli::main_with_args(std::env::args_os()));
}
