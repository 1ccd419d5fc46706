fn main() {
    std::process::exit(bufrelay::cli::main_with_args(std::env::args_os()));
}
