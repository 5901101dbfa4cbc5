fn main() {
    std::process::exit(fxbench::cli::run(std::env::args_os()));
}
