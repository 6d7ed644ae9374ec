fn main() {
    std::process::exit(dioplab_cli::run(std::env::args_os()));
}
