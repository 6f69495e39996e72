fn main() {
    std::process::exit(parallax_blur::cli::main_with_args(std::env::args_os()));
}
