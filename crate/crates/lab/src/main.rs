fn main() -> std::process::ExitCode {
    rangelp::cli::main()
}
