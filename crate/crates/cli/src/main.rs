fn main() {
    std::process::exit(flowsde_cli::main_with_args(std::env::args_os()));
}
