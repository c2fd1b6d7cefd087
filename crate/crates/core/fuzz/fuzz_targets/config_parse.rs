#![no_main]

use libfuzzer_sys::fuzz_target;
use webplate::bench::CaseConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = CaseConfig::from_toml(text) {
        let again = CaseConfig::from_toml(&cfg.to_toml()).expect("serialized config parses");
        assert_eq!(again, cfg);
    }
});
