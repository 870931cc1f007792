fn main() {
    std::process::exit(hybrid_magnonics::cli::main_with_args(std::env::args_os()));
}
