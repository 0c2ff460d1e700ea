fn main() {
    std::process::exit(addrloc::cli::run(std::env::args_os()));
}
