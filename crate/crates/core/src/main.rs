fn main() {
    std::process::exit(repdyn::cli::run(std::env::args_os()));
}
