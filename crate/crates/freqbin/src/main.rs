fn main() {
    std::process::exit(freqbin::run_command(std::env::args_os()));
}
