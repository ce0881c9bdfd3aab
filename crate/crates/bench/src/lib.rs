//! Deterministic synthetic inputs for the benchmark suite, sized and shaped
//! like production traffic so the numbers transfer.

use falconc_core::flow::{TCP_ACK, TCP_PSH, TCP_SYN};
use falconc_core::{
    init_params, seeded_rng, Architecture, AutoencoderParams, FeatureMatrix, PacketRecord,
};
use rand::Rng;

/// Packet capture with `n` packets spread over a couple dozen talkers. A
/// long silence every few thousand packets forces idle-timeout splits, so
/// aggregation exercises both grouping and flow cutting.
pub fn synthetic_packets(n: usize) -> Vec<PacketRecord> {
    (0..n)
        .map(|i| {
            let talker = i % 23;
            PacketRecord {
                timestamp: i as f64 * 0.05 + (i / 4000) as f64 * 600.0,
                src_ip: format!("10.1.{}.{}", talker / 8 + 1, talker % 8 + 10),
                dst_ip: "10.1.0.1".to_string(),
                src_port: 40000 + talker as u16,
                dst_port: if talker % 5 == 0 { 53 } else { 443 },
                protocol: if talker % 5 == 0 { 17 } else { 6 },
                length: 60 + (i % 1400) as u64,
                tcp_flags: match i % 7 {
                    0 => TCP_SYN | TCP_ACK,
                    1..=4 => TCP_ACK,
                    _ => TCP_ACK | TCP_PSH,
                },
            }
        })
        .collect()
}

/// Unlabeled matrix of standardized-looking feature rows.
pub fn synthetic_matrix(rows: usize, width: usize, seed: u64) -> FeatureMatrix {
    let mut rng = seeded_rng(seed);
    FeatureMatrix {
        feature_names: (0..width).map(|j| format!("f{j}")).collect(),
        labels: vec![None; rows],
        rows: (0..rows)
            .map(|_| (0..width).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect(),
    }
}

/// Untrained network at the deployed footprint. Initialization is enough
/// for timing: the arithmetic per pass does not depend on the weights.
pub fn deployed_network(width: usize) -> AutoencoderParams {
    let arch = Architecture::new(width, 80, 41).expect("deployed widths nest");
    init_params(&arch, 99).expect("valid architecture initializes")
}
