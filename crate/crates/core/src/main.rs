fn main() {
    std::process::exit(memtax::cli::run(std::env::args_os()));
}
