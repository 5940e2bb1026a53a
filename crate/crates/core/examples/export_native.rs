//! Converts a BIF file to the native format on stdout.

use deliberate_core::io::{parse_bif_with_warnings, serialize_network};

fn main() {
    let path = std::env::args().nth(1).expect("usage: export_native <file.bif>");
    let text = std::fs::read_to_string(&path).expect("readable input");
    let (mut net, warnings) = parse_bif_with_warnings(&text).expect("valid BIF");
    for w in &warnings {
        eprintln!("{w}");
    }
    net.provenance = Some(format!("converted from {}", std::path::Path::new(&path).file_name().unwrap().to_string_lossy()));
    print!("{}", serialize_network(&net));
}
