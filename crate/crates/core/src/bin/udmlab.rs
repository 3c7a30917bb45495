fn main() {
    std::process::exit(udmlab::cli::main_with_args(std::env::args_os()));
}
