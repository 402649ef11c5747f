fn main() {
    std::process::exit(stepcrn::cli::main());
}
