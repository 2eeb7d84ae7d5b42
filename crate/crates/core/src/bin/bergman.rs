fn main() {
    env_logger::init();
    std::process::exit(bergman_core::cli::main_with_args(std::env::args_os()));
}
