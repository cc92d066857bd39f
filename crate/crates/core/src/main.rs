fn main() {
    std::process::exit(lmcf_core::cli::main_with_args(std::env::args_os()));
}
