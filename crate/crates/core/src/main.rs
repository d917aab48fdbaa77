fn main() {
    std::process::exit(zetasign::cli::run(std::env::args_os()));
}
