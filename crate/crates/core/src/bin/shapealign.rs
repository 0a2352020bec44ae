fn main() {
    std::process::exit(shapealign::cli::main_with_args(std::env::args_os()));
}
