fn main() {
    if let Err(e) = ctbn_cli::run(std::env::args().collect()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
