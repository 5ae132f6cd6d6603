fn main() {
    std::process::exit(rcg::cli::main_with_args(std::env::args().collect()));
}
