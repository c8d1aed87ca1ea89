fn main() {
    std::process::exit(hawkes_ldp::cli::run(std::env::args_os()));
}
