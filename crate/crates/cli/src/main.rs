fn main() {
    std::process::exit(refmine_cli::app::main_with(std::env::args_os()));
}
