fn main() -> std::process::ExitCode {
    mls_uncertainty::cli::main_with(std::env::args_os())
}
