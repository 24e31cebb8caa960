fn main() {
    std::process::exit(mom_core::cli::run(std::env::args_os()));
}
