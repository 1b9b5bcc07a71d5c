#![no_main]

use std::path::Path;

use anomap_cli::manifest::{parse, render};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let base = Path::new("/base");
    if let Ok(entries) = parse(text, base) {
        let again = parse(&render(&entries, base), base).expect("rendered manifest parses");
        assert_eq!(again, entries);
    }
});
