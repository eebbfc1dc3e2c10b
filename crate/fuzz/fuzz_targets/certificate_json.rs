#![no_main]

use libfuzzer_sys::fuzz_target;
use phl::analysis::PotentialCertificate;

// Certificate files come from users; parsing must never panic, and accepted
// certificates must round trip through their JSON rendering.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cert) = PotentialCertificate::from_json(text) {
        let rendered = serde_json::to_string(&cert.to_json()).unwrap();
        let again = PotentialCertificate::from_json(&rendered).expect("rendered cert reparses");
        assert_eq!(again, cert);
    }
});
