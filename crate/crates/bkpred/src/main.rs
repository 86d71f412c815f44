fn main() {
    std::process::exit(bkpred::cli::main());
}
