fn main() {
    std::process::exit(ellmax_cli::run(std::env::args_os().skip(1)));
}
