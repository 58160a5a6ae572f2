fn main() {
    std::process::exit(gompertz_ps::cli::main());
}
