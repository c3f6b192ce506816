fn main() {
    std::process::exit(extopo::cli::run(std::env::args_os()));
}
