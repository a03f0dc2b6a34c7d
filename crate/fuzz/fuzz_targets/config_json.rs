#![no_main]

use libfuzzer_sys::fuzz_target;
use numsqueeze_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = RunConfig::from_json(text) else { return };
    let again = RunConfig::from_json(&config.to_json()).expect("serialized config parses");
    assert_eq!(config, again);
    let _ = config.validate();
    let _ = config.resolved();
});
