fn main() {
    std::process::exit(dr_core::cli::run(std::env::args_os()));
}
