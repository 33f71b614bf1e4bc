fn main() {
    std::process::exit(cellevo::cli::main());
}
