fn main() -> std::process::ExitCode {
    cfsc::cli::main()
}
