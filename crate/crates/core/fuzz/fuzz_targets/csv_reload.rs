#![no_main]

use libfuzzer_sys::fuzz_target;
use webplate::bench::{read_csv, write_csv};

fuzz_target!(|data: &[u8]| {
    let Ok((header, rows)) = read_csv(data) else { return };
    if rows.iter().any(|r| r.len() != header.len()) {
        return;
    }
    let names: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut buf = Vec::new();
    if write_csv(&mut buf, &names, &rows).is_err() {
        return;
    }
    let (h2, r2) = read_csv(buf.as_slice()).expect("written csv reloads");
    assert_eq!(h2, header);
    for (a, b) in rows.iter().zip(&r2) {
        for (x, y) in a.iter().zip(b) {
            assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
        }
    }
});
