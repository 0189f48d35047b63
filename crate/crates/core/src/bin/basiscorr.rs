use std::process::ExitCode;

fn main() -> ExitCode {
    match basiscorr::cli::run(std::env::args_os()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("basiscorr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
