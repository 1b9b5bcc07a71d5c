#![no_main]

use anomap::mvol::{decode, decode_header, encode_mask, encode_volume, MvolData};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let header = decode_header(data);
    if let Ok(decoded) = decode(data) {
        assert!(header.is_ok());
        // Decoding is strict, so every accepted buffer re-encodes to itself.
        let again = match &decoded {
            MvolData::Volume(v) => encode_volume(v),
            MvolData::Mask(m) => encode_mask(m),
        };
        assert_eq!(again.as_slice(), data);
    }
});
