use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = oblivion::cli::run(std::env::args_os());
    if let Some(report) = &outcome.report {
        match serde_json::to_string_pretty(report) {
            Ok(text) => println!("{text}"),
            Err(e) => {
                eprintln!("cannot serialize report: {e}");
                return ExitCode::from(2);
            }
        }
    }
    if !outcome.summary.is_empty() {
        eprintln!("{}", outcome.summary.trim_end());
    }
    ExitCode::from(outcome.code as u8)
}
