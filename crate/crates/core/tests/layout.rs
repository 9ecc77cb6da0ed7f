use proptest::prelude::*;
use spikecore::hbm::{check_invariants, compile, decompile, read_image, write_image};
use spikecore::random::{random_network, RandomSpec};
use spikecore::{example_network, Network};

fn round_trip(net: &Network) {
    let image = compile(net).unwrap();
    check_invariants(&image).unwrap();
    assert_eq!(&decompile(&image).unwrap(), net);
    let mut bytes = Vec::new();
    write_image(&image, &mut bytes).unwrap();
    assert_eq!(read_image(bytes.as_slice()).unwrap(), image);
}

#[test]
fn example_network_round_trips() {
    round_trip(&example_network());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_networks_round_trip(seed in any::<u64>(), noisy in any::<bool>()) {
        let (net, _) = random_network(seed, &RandomSpec { noisy, ..Default::default() });
        round_trip(&net);
    }

    #[test]
    fn truncated_files_are_rejected(seed in any::<u64>(), cut in 1usize..64) {
        let (net, _) = random_network(seed, &RandomSpec { max_neurons: 40, ..Default::default() });
        let mut bytes = Vec::new();
        write_image(&compile(&net).unwrap(), &mut bytes).unwrap();
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(read_image(&bytes[..keep]).is_err());
    }
}
