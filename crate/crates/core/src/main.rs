fn main() {
    std::process::exit(oqac::cli::main());
}
