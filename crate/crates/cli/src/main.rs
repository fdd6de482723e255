fn main() {
    std::process::exit(apca_cli::run(std::env::args_os()));
}
