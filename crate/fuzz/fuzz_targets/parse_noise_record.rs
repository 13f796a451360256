#![no_main]

use libfuzzer_sys::fuzz_target;
use rcmixup::data::NoiseRecord;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(record) = NoiseRecord::from_json(text) {
        assert_eq!(record.indices.len(), record.original_labels.len());
        assert!(record.indices.windows(2).all(|w| w[0] < w[1]));
        let again = NoiseRecord::from_json(&record.to_json().unwrap()).unwrap();
        assert_eq!(again, record);
    }
});
