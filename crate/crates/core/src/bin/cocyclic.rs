fn main() {
    std::process::exit(cocyclic::cli::run(std::env::args_os()));
}
