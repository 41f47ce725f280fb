fn main() {
    std::process::exit(zclb::cli::dispatch(std::env::args_os()));
}
