#![no_main]

use libfuzzer_sys::fuzz_target;
use oculorl_core::evalkit::parse_series_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(series) = parse_series_csv(text) {
            let _ = series.bands();
            let _ = parse_series_csv(&series.to_csv());
        }
    }
});
