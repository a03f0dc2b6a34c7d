#![no_main]

use libfuzzer_sys::fuzz_target;
use numsqueeze_cli::spool::{decode, encode};

fuzz_target!(|data: &[u8]| {
    let Ok((n_phi, records)) = decode(data) else { return };
    assert_eq!(encode(n_phi, &records).expect("decoded spool encodes"), data);
});
