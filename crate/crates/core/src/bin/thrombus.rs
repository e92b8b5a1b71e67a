fn main() {
    std::process::exit(laa_thrombus::cli::run(std::env::args_os()));
}
