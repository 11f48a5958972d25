fn main() {
    std::process::exit(latent_match::cli::main());
}
