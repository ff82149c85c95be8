fn main() {
    std::process::exit(wflr::cli::run(std::env::args_os()));
}
