fn main() {
    std::process::exit(defent::cli::main_with_args(std::env::args_os()));
}
