fn main() {
    std::process::exit(ampere2d::cli::main_with_args(std::env::args_os()));
}
