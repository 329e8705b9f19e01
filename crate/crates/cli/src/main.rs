fn main() {
    std::process::exit(npvo_cli::run(std::env::args_os()));
}
