fn main() {
    std::process::exit(qafs::cli::main(std::env::args_os()));
}
