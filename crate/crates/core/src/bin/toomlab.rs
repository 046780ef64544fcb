fn main() {
    std::process::exit(toomlab::cli::main());
}
