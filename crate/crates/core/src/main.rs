fn main() {
    std::process::exit(pdlab::cli_main());
}
