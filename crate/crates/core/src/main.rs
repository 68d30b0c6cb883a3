fn main() {
    std::process::exit(hfce::cli::run(std::env::args_os()));
}
