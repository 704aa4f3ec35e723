use std::process::ExitCode;

fn main() -> ExitCode {
    match mia_audit::cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("mia-audit: {}", e.message);
            }
            ExitCode::from(e.exit_code as u8)
        }
    }
}
