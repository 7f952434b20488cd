use clap::Parser;

fn main() {
    let cli = desklab_cli::Cli::parse();
    match desklab_cli::run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
