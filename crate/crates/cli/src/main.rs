fn main() -> std::process::ExitCode {
    qlab_cli::main_with_args(std::env::args_os())
}
