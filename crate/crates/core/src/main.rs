fn main() {
    std::process::exit(atompart::cli::main_entry());
}
