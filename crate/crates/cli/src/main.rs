use std::io::Write;

fn main() {
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    let code = admitlens_cli::run_with_args(std::env::args_os(), &mut stdout, &mut stderr);
    // process::exit skips destructors, so flush buffered output first.
    let _ = stdout.flush();
    let _ = stderr.flush();
    std::process::exit(code);
}
