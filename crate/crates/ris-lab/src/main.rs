fn main() {
    std::process::exit(ris_lab::cli::run());
}
