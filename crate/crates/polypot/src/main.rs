fn main() {
    std::process::exit(polypot::cli::main_with(std::env::args_os()));
}
