fn main() -> std::process::ExitCode {
    intentmfg::cli::main()
}
