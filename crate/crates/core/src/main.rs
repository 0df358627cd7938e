fn main() {
    std::process::exit(uavslice::cli::run(std::env::args_os()));
}
