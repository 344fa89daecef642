fn main() {
    std::process::exit(vi_extragrad::cli::cli_main(std::env::args_os()));
}
