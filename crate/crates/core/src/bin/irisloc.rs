fn main() -> std::process::ExitCode {
    irisloc::cli::main()
}
