fn main() {
    std::process::exit(birchwalk_cli::run(std::env::args_os()));
}
