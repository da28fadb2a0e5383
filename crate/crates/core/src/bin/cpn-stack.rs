fn main() {
    std::process::exit(cpn_stack::cli::run(std::env::args_os()));
}
