#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(specs) = nswbandit_cli::parse_algo_list(text) {
        for s in specs {
            let again: nswbandit_cli::AlgoSpec = s.to_string().parse().expect("rendered spec parses");
            assert_eq!(again, s);
        }
    }
    if let Ok(seeds) = nswbandit_cli::parse_seed_list(text) {
        assert!(!seeds.is_empty());
    }
});
