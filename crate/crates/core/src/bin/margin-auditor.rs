fn main() {
    std::process::exit(margin_auditor::cli::main_with_args(std::env::args_os()));
}
