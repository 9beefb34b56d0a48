fn main() {
    std::process::exit(hamlearn::cli::main());
}
