fn main() -> std::process::ExitCode {
    ollo::cli::main()
}
