fn main() {
    std::process::exit(versetune_service::cli::run(std::env::args_os()));
}
