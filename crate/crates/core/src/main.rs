fn main() {
    std::process::exit(lowzero::cli::run(std::env::args_os()));
}
