//! Check that a model server speaks the wire protocol correctly. With no
//! URL, an in-process mock server is started and checked.
//!
//! ```text
//! cargo run --example conformance [http://host:port]
//! ```

use dual_al::backend::{run_conformance, serve, BackendDescriptor, MockBackend, RemoteBackend};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let local = match std::env::args().nth(1) {
        Some(_) => None,
        None => Some(serve(MockBackend::default(), "mock", "127.0.0.1:0")?),
    };
    let url = match &local {
        Some(server) => server.url(),
        None => std::env::args().nth(1).unwrap(),
    };

    let mut remote = RemoteBackend::connect(BackendDescriptor::remote(&url)?)?;
    println!("{url}: model {}", remote.model());
    let report = run_conformance(&mut remote);
    for check in &report.checks {
        let mark = if check.passed { "ok  " } else { "FAIL" };
        println!("{mark} {:<24} {}", check.name, check.detail);
    }
    if let Some(server) = local {
        server.shutdown();
    }
    if !report.passed() {
        std::process::exit(1);
    }
    Ok(())
}
