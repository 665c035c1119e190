//! Writes a synthetic fixture to stdout.
//!
//! Usage: `synthetic_fixture <depth> [zero | det <ell>]`

use plectic::shapiro::KappaFile;
use plectic::synthetic::{synthetic_fixture, SyntheticSpec};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let depth: u32 = args.first().and_then(|s| s.parse().ok()).unwrap_or(3);
    let kappa = match args.get(1).map(String::as_str) {
        Some("det") => KappaFile::DetValuation { ell: args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2) },
        _ => KappaFile::Zero,
    };
    let file = synthetic_fixture(&SyntheticSpec::new(3, 37, depth, kappa)).expect("synthetic fixture");
    println!("{}", serde_json::to_string_pretty(&file).unwrap());
}
