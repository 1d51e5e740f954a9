fn main() {
    std::process::exit(pagezones::cli::run(std::env::args_os()));
}
