fn main() -> std::process::ExitCode {
    suif::cli::main()
}
