fn main() {
    std::process::exit(netdesign::cli::run(std::env::args_os()));
}
