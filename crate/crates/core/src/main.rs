fn main() {
    std::process::exit(databc::cli::run(std::env::args_os()));
}
