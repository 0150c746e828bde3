fn main() {
    std::process::exit(ea_lab::cli::run());
}
