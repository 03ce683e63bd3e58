fn main() {
    std::process::exit(ep_spectra::cli::run(std::env::args_os()));
}
