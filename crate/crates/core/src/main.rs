fn main() {
    let seed = std::env::var(multibubble::cli::SEED_ENV).ok();
    let code = multibubble::cli::run(
        std::env::args_os(),
        seed.as_deref(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
