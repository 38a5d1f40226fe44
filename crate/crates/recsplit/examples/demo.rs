//! The README walkthrough: build, query, serialize, reload.

use recsplit::{build, MphfConfig, RecSplitMphf};

fn main() {
    let keys: Vec<String> = (0..1_000_000).map(|i| format!("key{i}")).collect();

    let config = MphfConfig {
        leaf_size: 8,
        bucket_size: 100,
        ..MphfConfig::default()
    };
    let threads = 4;
    let mphf = build(&keys, &config, threads).expect("keys are distinct");

    assert!(mphf.query(keys[42].as_bytes()) < keys.len());
    println!("{:.3} bits/key", mphf.bits_per_key());

    // round-trip through bytes
    let back = RecSplitMphf::from_bytes(&mphf.to_bytes()).expect("just serialized");
    assert_eq!(back.query(keys[42].as_bytes()), mphf.query(keys[42].as_bytes()));
}
