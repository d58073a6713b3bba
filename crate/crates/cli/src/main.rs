fn main() {
    std::process::exit(nonlocal_spectra_cli::run(std::env::args_os()));
}
