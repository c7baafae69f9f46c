fn main() {
    std::process::exit(specdep::cli::main());
}
