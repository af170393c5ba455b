fn main() -> std::process::ExitCode {
    optempest_cli::main_entry()
}
