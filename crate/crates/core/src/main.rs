use std::io::{self, Write};

/// Values and shapes are handled without recursion, but a generous stack
/// keeps third-party code paths safe on very deep inputs.
const STACK_BYTES: usize = 256 << 20;

fn main() {
    let code = std::thread::Builder::new()
        .name("ctgen".into())
        .stack_size(STACK_BYTES)
        .spawn(|| {
            let stdout = io::stdout();
            let mut out = io::BufWriter::new(stdout.lock());
            let mut err = io::stderr();
            let code = ctgen_core::cli::run(std::env::args_os(), &mut out, &mut err);
            let _ = out.flush();
            code
        })
        .expect("spawn main thread")
        .join()
        .unwrap_or(2);
    std::process::exit(code);
}
