fn main() {
    std::process::exit(qkdh::cli::main_with(std::env::args_os()));
}
