fn main() {
    std::process::exit(cpl_core::eval::cli_main(std::env::args_os()));
}
