fn main() {
    std::process::exit(projective_dpt::cli::main_with_args(std::env::args_os()));
}
