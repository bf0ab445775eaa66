fn main() -> std::process::ExitCode {
    atypicality::cli::main()
}
