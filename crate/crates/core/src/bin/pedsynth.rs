fn main() {
    std::process::exit(pedsynth::cli::main());
}
