#![no_main]

use libfuzzer_sys::fuzz_target;
use rcmixup::experiment::RunReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = RunReport::from_json(text) {
        let again = RunReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(again, report);
    }
});
