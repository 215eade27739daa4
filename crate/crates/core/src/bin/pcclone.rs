fn main() {
    std::process::exit(pcclone::cli::run_from_args(std::env::args_os()));
}
