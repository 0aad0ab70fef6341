fn main() {
    std::process::exit(rpreact::cli::main_with(std::env::args_os()));
}
