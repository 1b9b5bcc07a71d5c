#![no_main]

use anomap::pipeline::StageOrder;
use anomap::{Method, Role, WeightMode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = text.parse::<Method>() {
        assert_eq!(m.to_string().parse::<Method>(), Ok(m));
    }
    if let Ok(w) = text.parse::<WeightMode>() {
        assert_eq!(w.to_string().parse::<WeightMode>(), Ok(w));
    }
    if let Ok(o) = text.parse::<StageOrder>() {
        assert_eq!(o.to_string().parse::<StageOrder>(), Ok(o));
    }
    if let Ok(r) = text.parse::<Role>() {
        assert_eq!(r.to_string().parse::<Role>(), Ok(r));
    }
});
