fn main() {
    std::process::exit(hps_core::cli::run(std::env::args_os()));
}
