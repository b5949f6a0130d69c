fn main() {
    std::process::exit(sed_oscillator::cli::run(std::env::args_os()));
}
