fn main() {
    std::process::exit(fusionforge::cli::dispatch(std::env::args_os()));
}
