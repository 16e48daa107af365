fn main() {
    std::process::exit(curvmeas::cli::main_with_args(std::env::args_os()));
}
