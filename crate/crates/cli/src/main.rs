fn main() {
    std::process::exit(mirrorlab_cli::app::main_exit_code());
}
