fn main() {
    std::process::exit(corcondia::cli::run(std::env::args_os()));
}
