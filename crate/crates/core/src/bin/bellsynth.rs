fn main() {
    std::process::exit(bellsynth::cli::main_with_args(std::env::args_os()));
}
