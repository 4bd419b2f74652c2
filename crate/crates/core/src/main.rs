fn main() {
    std::process::exit(porosurf_core::cli::main_with_args(std::env::args_os()));
}
