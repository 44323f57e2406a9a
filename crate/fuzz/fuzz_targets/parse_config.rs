#![no_main]

use libfuzzer_sys::fuzz_target;
use oculorl_core::config::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            // anything accepted must survive a snapshot round trip
            let snap = cfg.resolved();
            let back = parse_config(&snap.to_toml()).expect("snapshot parses");
            assert_eq!(back, snap);
        }
    }
});
