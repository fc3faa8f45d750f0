#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(instance) = nswbandit::parse_instance(text) {
        // Anything accepted must round-trip through its own rendering.
        let again = nswbandit::parse_instance(&instance.to_toml_string()).expect("rendered instance parses");
        assert_eq!(again, instance);
    }
});
