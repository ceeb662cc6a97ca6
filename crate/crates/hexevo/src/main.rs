fn main() -> std::process::ExitCode {
    hexevo::cli::main()
}
