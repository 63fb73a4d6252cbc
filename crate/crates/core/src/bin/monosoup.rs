fn main() {
    std::process::exit(monosoup::cli::run(std::env::args_os()));
}
