//! Serve the mock backend over HTTP so remote clients can be exercised
//! without a real model.
//!
//! ```text
//! cargo run --example mock_server [addr]
//! cargo run -- run --synthetic --backend http://127.0.0.1:8765
//! ```

use std::io::BufRead;

use dual_al::backend::{serve, MockBackend};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let addr = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "127.0.0.1:8765".into());
    let server = serve(MockBackend::default(), "mock", &addr)?;
    println!("serving mock backend at {}", server.url());
    println!("press enter to stop");
    let mut line = String::new();
    std::io::stdin().lock().read_line(&mut line)?;
    server.shutdown();
    Ok(())
}
