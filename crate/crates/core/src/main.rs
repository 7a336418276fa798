fn main() {
    std::process::exit(ddnet::cli::run(std::env::args_os()));
}
