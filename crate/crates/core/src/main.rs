fn main() {
    let code = jacobi_lattice::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
