//! Replays the checked-in fuzz corpus through the properties the fuzz
//! targets assert, so the seeds stay valid inputs.

use std::fs;
use std::path::PathBuf;

use numsqueeze_cli::spool::{decode, encode};
use numsqueeze_cli::table::{read_densities, write_densities};
use numsqueeze_cli::{read_results, write_results, RunConfig};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let bytes = fs::read(&path).unwrap();
            (path, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn config_seeds_parse_and_round_trip() {
    for (path, bytes) in seeds("config_json") {
        let config = RunConfig::from_json(std::str::from_utf8(&bytes).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(RunConfig::from_json(&config.to_json()).unwrap(), config, "{}", path.display());
    }
}

#[test]
fn results_seeds_parse_and_rewrite_stably() {
    for (path, bytes) in seeds("results_csv") {
        let rows = read_results(bytes.as_slice()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mut first = Vec::new();
        write_results(&mut first, &rows).unwrap();
        assert_eq!(first, bytes, "{}", path.display());
    }
}

#[test]
fn density_seeds_parse_and_rewrite_stably() {
    for (path, bytes) in seeds("densities_csv") {
        let profiles = read_densities(bytes.as_slice()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mut first = Vec::new();
        write_densities(&mut first, &profiles).unwrap();
        assert_eq!(first, bytes, "{}", path.display());
    }
}

#[test]
fn spool_seeds_decode_and_re_encode_exactly() {
    for (path, bytes) in seeds("spool_decode") {
        let (n_phi, records) = decode(&bytes).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(encode(n_phi, &records).unwrap(), bytes, "{}", path.display());
    }
}
