fn main() {
    std::process::exit(mrflab::cli::main_entry());
}
