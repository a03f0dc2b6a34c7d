#![no_main]

use libfuzzer_sys::fuzz_target;
use numsqueeze_cli::table::{read_densities, write_densities};

fuzz_target!(|data: &[u8]| {
    let Ok(profiles) = read_densities(data) else { return };
    let mut first = Vec::new();
    write_densities(&mut first, &profiles).unwrap();
    let reread = read_densities(first.as_slice()).expect("written table parses");
    let mut second = Vec::new();
    write_densities(&mut second, &reread).unwrap();
    assert_eq!(first, second);
    for p in &profiles {
        let _ = p.mode2_relative_change();
    }
});
