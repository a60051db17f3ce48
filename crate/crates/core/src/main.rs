fn main() {
    std::process::exit(skyflow::cli::main_with_args(std::env::args_os()));
}
