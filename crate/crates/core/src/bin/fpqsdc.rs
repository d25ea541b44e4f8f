fn main() {
    std::process::exit(fpqsdc::cli::run(std::env::args_os()));
}
