fn main() {
    std::process::exit(splatprune::cli::run(std::env::args_os()));
}
