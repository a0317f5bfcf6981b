fn main() {
    std::process::exit(rcdp::cli::run(std::env::args_os()));
}
