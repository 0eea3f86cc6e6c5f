fn main() {
    std::process::exit(xfertune_cli::run(std::env::args_os()));
}
