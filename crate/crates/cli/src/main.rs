fn main() {
    std::process::exit(oplab_cli::run(std::env::args_os()));
}
