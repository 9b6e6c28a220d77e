fn main() {
    std::process::exit(lola_core::cli::main());
}
