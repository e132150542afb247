fn main() {
    std::process::exit(so3tengen::cli::run(std::env::args_os()));
}
