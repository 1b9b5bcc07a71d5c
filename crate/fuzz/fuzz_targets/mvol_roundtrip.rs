#![no_main]

use anomap::mvol::{decode_mask, decode_volume, encode_mask, encode_volume};
use anomap::{Mask3D, Volume3D};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() < 3 {
        return;
    }
    let dims = [
        1 + (data[0] % 8) as usize,
        1 + (data[1] % 8) as usize,
        1 + (data[2] % 8) as usize,
    ];
    let n: usize = dims.iter().product();
    let body = &data[3..];
    let samples: Vec<f32> = (0..n)
        .map(|i| {
            let mut b = [0u8; 4];
            for (k, byte) in b.iter_mut().enumerate() {
                *byte = body.get(4 * i + k).copied().unwrap_or(0);
            }
            f32::from_le_bytes(b)
        })
        .map(|v| if v.is_finite() { v } else { 0.0 })
        .collect();
    let v = Volume3D::new(dims, [1.0, 0.5, 2.0], samples).unwrap();
    let back = decode_volume(&encode_volume(&v)).unwrap();
    assert!(back
        .data()
        .iter()
        .zip(v.data())
        .all(|(a, b)| a.to_bits() == b.to_bits()));

    let bits: Vec<bool> = (0..n)
        .map(|i| body.get(i).is_some_and(|b| b & 1 == 1))
        .collect();
    let m = Mask3D::new(dims, bits).unwrap();
    assert_eq!(decode_mask(&encode_mask(&m)).unwrap(), m);
});
