fn main() {
    std::process::exit(heliox::run_cli(std::env::args_os()));
}
