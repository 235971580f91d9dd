fn main() {
    std::process::exit(riga::cli::run(std::env::args()));
}
