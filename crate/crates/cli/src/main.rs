fn main() -> std::process::ExitCode {
    nv_eddy_cli::main_entry()
}
