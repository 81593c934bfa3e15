fn main() {
    std::process::exit(hstab_cli::run(std::env::args_os()));
}
