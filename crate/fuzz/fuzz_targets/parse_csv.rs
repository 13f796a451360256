#![no_main]

use libfuzzer_sys::fuzz_target;
use rcmixup::data::{parse_csv, write_csv};

fuzz_target!(|data: &[u8]| {
    let Some((&dims, body)) = data.split_first() else {
        return;
    };
    let label_dims = usize::from(dims % 4) + 1;
    if let Ok(ds) = parse_csv(body, label_dims, "fuzz") {
        assert_eq!(ds.label_dim(), label_dims);
        assert!(ds.x.is_finite() && ds.y.is_finite());
        // Whatever parses must survive a write/read cycle unchanged.
        let mut out = Vec::new();
        write_csv(&ds, &mut out).unwrap();
        let back = parse_csv(out.as_slice(), label_dims, "fuzz").unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.y, ds.y);
    }
});
