#![no_main]

use libfuzzer_sys::fuzz_target;
use numsqueeze_cli::{read_results, write_results};

fuzz_target!(|data: &[u8]| {
    let Ok(rows) = read_results(data) else { return };
    let mut first = Vec::new();
    write_results(&mut first, &rows).unwrap();
    let reread = read_results(first.as_slice()).expect("written table parses");
    let mut second = Vec::new();
    write_results(&mut second, &reread).unwrap();
    assert_eq!(first, second);
});
