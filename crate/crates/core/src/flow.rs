//! Flow records and bidirectional packet aggregation.
//!
//! Traffic is grouped by a canonical bidirectional 5-tuple: the endpoint with
//! the smaller `(address, port)` pair is always stored first, so packets of
//! both directions land in the same flow regardless of who spoke first. Long
//! silences split a tuple's traffic into separate flows, and the sender of
//! the first packet defines the forward direction.

use std::collections::BTreeMap;
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// TCP flag bit masks as they appear in the `tcp_flags` packet field.
pub const TCP_FIN: u8 = 0x01;
pub const TCP_SYN: u8 = 0x02;
pub const TCP_RST: u8 = 0x04;
pub const TCP_PSH: u8 = 0x08;
pub const TCP_ACK: u8 = 0x10;
pub const TCP_URG: u8 = 0x20;

/// Default idle gap (seconds) after which a 5-tuple's traffic is split into
/// a new flow.
pub const DEFAULT_IDLE_TIMEOUT: f64 = 120.0;

/// Traffic class of a capture scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowClass {
    Benign,
    Recon,
    Dos,
}

impl FlowClass {
    /// Parse the textual form used in manifests and CSV label columns.
    pub fn parse(text: &str) -> Result<FlowClass> {
        match text.trim().to_ascii_lowercase().as_str() {
            "benign" => Ok(FlowClass::Benign),
            "recon" => Ok(FlowClass::Recon),
            "dos" => Ok(FlowClass::Dos),
            other => Err(Error::Data(format!("unknown flow class: {other:?}"))),
        }
    }

    /// True for either attack class.
    pub fn is_malicious(&self) -> bool {
        !matches!(self, FlowClass::Benign)
    }
}

impl fmt::Display for FlowClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowClass::Benign => write!(f, "benign"),
            FlowClass::Recon => write!(f, "recon"),
            FlowClass::Dos => write!(f, "dos"),
        }
    }
}

/// Whether the station was delivering energy while the capture ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChargingState {
    Charging,
    Idle,
}

impl ChargingState {
    pub fn parse(text: &str) -> Result<ChargingState> {
        match text.trim().to_ascii_lowercase().as_str() {
            "charging" => Ok(ChargingState::Charging),
            "idle" => Ok(ChargingState::Idle),
            other => Err(Error::Data(format!("unknown charging state: {other:?}"))),
        }
    }
}

impl fmt::Display for ChargingState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChargingState::Charging => write!(f, "charging"),
            ChargingState::Idle => write!(f, "idle"),
        }
    }
}

/// Ground-truth annotation for one capture scenario.
///
/// Invariant: the class is benign exactly when the attack name is `"none"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioLabel {
    pub class: FlowClass,
    pub attack: String,
    pub state: ChargingState,
}

impl ScenarioLabel {
    /// Label for benign traffic; the attack name is fixed to `"none"`.
    pub fn benign(state: ChargingState) -> ScenarioLabel {
        ScenarioLabel {
            class: FlowClass::Benign,
            attack: "none".to_string(),
            state,
        }
    }

    /// Label for attack traffic; rejects benign/attack-name mismatches.
    pub fn attack(class: FlowClass, attack: &str, state: ChargingState) -> Result<ScenarioLabel> {
        let label = ScenarioLabel {
            class,
            attack: attack.to_string(),
            state,
        };
        label.validate()?;
        Ok(label)
    }

    /// Check the class/attack-name consistency invariant.
    pub fn validate(&self) -> Result<()> {
        let is_none = self.attack == "none";
        if (self.class == FlowClass::Benign) != is_none {
            return Err(Error::Data(format!(
                "label class {} is inconsistent with attack name {:?}",
                self.class, self.attack
            )));
        }
        Ok(())
    }
}

/// One captured packet, as read from a packet table.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    /// Capture time in seconds (any fixed epoch).
    pub timestamp: f64,
    pub src_ip: String,
    pub dst_ip: String,
    pub src_port: u16,
    pub dst_port: u16,
    /// IP protocol number (6 = TCP, 17 = UDP, 1 = ICMP, ...).
    pub protocol: u8,
    /// Total packet length in bytes.
    pub length: u64,
    /// OR-combination of the `TCP_*` flag masks; zero for non-TCP.
    pub tcp_flags: u8,
}

/// Canonical bidirectional flow identity.
///
/// Endpoint `a` is always the smaller `(address, port)` pair, so the key is
/// identical no matter which side sent first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowKey {
    pub addr_a: Ipv4Addr,
    pub port_a: u16,
    pub addr_b: Ipv4Addr,
    pub port_b: u16,
    pub protocol: u8,
}

impl FlowKey {
    /// Build the canonical key for a packet; the second value is true when
    /// the packet's source is endpoint `a`.
    pub fn canonical(
        src: Ipv4Addr,
        src_port: u16,
        dst: Ipv4Addr,
        dst_port: u16,
        protocol: u8,
    ) -> (FlowKey, bool) {
        if (src, src_port) <= (dst, dst_port) {
            (
                FlowKey {
                    addr_a: src,
                    port_a: src_port,
                    addr_b: dst,
                    port_b: dst_port,
                    protocol,
                },
                true,
            )
        } else {
            (
                FlowKey {
                    addr_a: dst,
                    port_a: dst_port,
                    addr_b: src,
                    port_b: src_port,
                    protocol,
                },
                false,
            )
        }
    }
}

/// Per-direction packet statistics. Sizes are zero when the direction saw
/// no packets at all.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DirectionStats {
    pub packets: u64,
    pub bytes: u64,
    pub min_ps: f64,
    pub max_ps: f64,
    pub mean_ps: f64,
}

impl DirectionStats {
    fn from_lengths(lengths: &[u64]) -> DirectionStats {
        if lengths.is_empty() {
            return DirectionStats::default();
        }
        let bytes: u64 = lengths.iter().sum();
        let min = *lengths.iter().min().expect("nonempty") as f64;
        let max = *lengths.iter().max().expect("nonempty") as f64;
        DirectionStats {
            packets: lengths.len() as u64,
            bytes,
            min_ps: min,
            max_ps: max,
            mean_ps: bytes as f64 / lengths.len() as f64,
        }
    }
}

/// Counts of TCP flags seen across both directions of a flow.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TcpFlagCounts {
    pub syn: u64,
    pub ack: u64,
    pub psh: u64,
    pub rst: u64,
    pub fin: u64,
    pub urg: u64,
}

/// An extra per-flow attribute carried through from an input table.
///
/// Numbers must be finite; anything that does not parse as a finite float is
/// kept as text.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureValue {
    Number(f64),
    Text(String),
}

/// One bidirectional flow with its fixed statistics and any extra columns
/// carried through from the source table.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub key: FlowKey,
    /// True when endpoint `a` of the key sent the first packet.
    pub forward_from_a: bool,
    pub start_time: f64,
    pub end_time: f64,
    pub duration: f64,
    /// Statistics for the direction of the first packet.
    pub fwd: DirectionStats,
    /// Statistics for the reply direction.
    pub bwd: DirectionStats,
    pub flags: TcpFlagCounts,
    /// Extra columns keyed by name; kept sorted for deterministic output.
    pub extra: BTreeMap<String, FeatureValue>,
}

impl FlowRecord {
    /// Address of the endpoint that sent the first packet.
    pub fn src_ip(&self) -> Ipv4Addr {
        if self.forward_from_a {
            self.key.addr_a
        } else {
            self.key.addr_b
        }
    }

    pub fn src_port(&self) -> u16 {
        if self.forward_from_a {
            self.key.port_a
        } else {
            self.key.port_b
        }
    }

    /// Address of the endpoint that replied (or was talked at).
    pub fn dst_ip(&self) -> Ipv4Addr {
        if self.forward_from_a {
            self.key.addr_b
        } else {
            self.key.addr_a
        }
    }

    pub fn dst_port(&self) -> u16 {
        if self.forward_from_a {
            self.key.port_b
        } else {
            self.key.port_a
        }
    }
}

/// A flow plus its scenario annotation, when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFlow {
    pub flow: FlowRecord,
    pub label: Option<ScenarioLabel>,
}

/// Result of aggregating a packet table.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationOutcome {
    pub flows: Vec<FlowRecord>,
    /// Packets dropped for unparseable addresses or non-finite timestamps.
    pub rejected_packets: usize,
}

struct ParsedPacket<'a> {
    packet: &'a PacketRecord,
    src: Ipv4Addr,
    dst: Ipv4Addr,
}

/// Group packets into bidirectional flows, splitting a tuple's traffic
/// whenever consecutive packets are more than `idle_timeout` seconds apart.
///
/// The result is independent of input order: packets are sorted by time
/// (full content as tie break) before grouping, and flows come back ordered
/// by start time. Packets with unparseable addresses or non-finite
/// timestamps are counted in `rejected_packets` rather than failing the call.
pub fn aggregate_packets(
    packets: &[PacketRecord],
    idle_timeout: f64,
) -> Result<AggregationOutcome> {
    if !(idle_timeout > 0.0 && idle_timeout.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "idle timeout must be a positive finite number of seconds, got {idle_timeout}"
        )));
    }

    let mut rejected = 0usize;
    let mut parsed: Vec<ParsedPacket<'_>> = Vec::with_capacity(packets.len());
    for packet in packets {
        let src = packet.src_ip.parse::<Ipv4Addr>();
        let dst = packet.dst_ip.parse::<Ipv4Addr>();
        match (src, dst) {
            (Ok(src), Ok(dst)) if packet.timestamp.is_finite() => {
                parsed.push(ParsedPacket { packet, src, dst });
            }
            _ => rejected += 1,
        }
    }

    // Total order over packet content so equal inputs in any order produce
    // identical flows.
    parsed.sort_by(|x, y| {
        x.packet
            .timestamp
            .total_cmp(&y.packet.timestamp)
            .then_with(|| (x.src, x.packet.src_port).cmp(&(y.src, y.packet.src_port)))
            .then_with(|| (x.dst, x.packet.dst_port).cmp(&(y.dst, y.packet.dst_port)))
            .then_with(|| x.packet.protocol.cmp(&y.packet.protocol))
            .then_with(|| x.packet.length.cmp(&y.packet.length))
            .then_with(|| x.packet.tcp_flags.cmp(&y.packet.tcp_flags))
    });

    let mut groups: BTreeMap<FlowKey, Vec<&ParsedPacket<'_>>> = BTreeMap::new();
    for p in &parsed {
        let (key, _) = FlowKey::canonical(p.src, p.packet.src_port, p.dst, p.packet.dst_port, p.packet.protocol);
        groups.entry(key).or_default().push(p);
    }

    let mut flows = Vec::new();
    for (key, group) in &groups {
        let mut run_start = 0usize;
        for i in 1..=group.len() {
            let split = i == group.len()
                || group[i].packet.timestamp - group[i - 1].packet.timestamp > idle_timeout;
            if split {
                flows.push(build_flow(*key, &group[run_start..i]));
                run_start = i;
            }
        }
    }

    flows.sort_by(|x, y| x.start_time.total_cmp(&y.start_time).then_with(|| x.key.cmp(&y.key)));
    Ok(AggregationOutcome {
        flows,
        rejected_packets: rejected,
    })
}

fn build_flow(key: FlowKey, run: &[&ParsedPacket<'_>]) -> FlowRecord {
    let first = run.first().expect("idle split never yields an empty run");
    let forward_from_a = (first.src, first.packet.src_port) == (key.addr_a, key.port_a);
    let fwd_endpoint = (first.src, first.packet.src_port);

    let mut fwd_lengths = Vec::new();
    let mut bwd_lengths = Vec::new();
    let mut flags = TcpFlagCounts::default();
    for p in run {
        if (p.src, p.packet.src_port) == fwd_endpoint {
            fwd_lengths.push(p.packet.length);
        } else {
            bwd_lengths.push(p.packet.length);
        }
        let bits = p.packet.tcp_flags;
        flags.syn += u64::from(bits & TCP_SYN != 0);
        flags.ack += u64::from(bits & TCP_ACK != 0);
        flags.psh += u64::from(bits & TCP_PSH != 0);
        flags.rst += u64::from(bits & TCP_RST != 0);
        flags.fin += u64::from(bits & TCP_FIN != 0);
        flags.urg += u64::from(bits & TCP_URG != 0);
    }

    let start_time = first.packet.timestamp;
    let end_time = run.last().expect("nonempty").packet.timestamp;
    FlowRecord {
        key,
        forward_from_a,
        start_time,
        end_time,
        duration: end_time - start_time,
        fwd: DirectionStats::from_lengths(&fwd_lengths),
        bwd: DirectionStats::from_lengths(&bwd_lengths),
        flags,
        extra: BTreeMap::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pkt(ts: f64, src: &str, sp: u16, dst: &str, dp: u16, len: u64, flags: u8) -> PacketRecord {
        PacketRecord {
            timestamp: ts,
            src_ip: src.to_string(),
            dst_ip: dst.to_string(),
            src_port: sp,
            dst_port: dp,
            protocol: 6,
            length: len,
            tcp_flags: flags,
        }
    }

    #[test]
    fn canonical_key_ignores_direction() {
        let a: Ipv4Addr = "10.0.0.1".parse().unwrap();
        let b: Ipv4Addr = "10.0.0.2".parse().unwrap();
        let (k1, src_is_a) = FlowKey::canonical(a, 5000, b, 80, 6);
        let (k2, src_is_a2) = FlowKey::canonical(b, 80, a, 5000, 6);
        assert_eq!(k1, k2);
        assert!(src_is_a);
        assert!(!src_is_a2);
    }

    #[test]
    fn canonical_key_orders_equal_addresses_by_port() {
        let a: Ipv4Addr = "10.0.0.1".parse().unwrap();
        let (k, src_is_a) = FlowKey::canonical(a, 9000, a, 80, 6);
        assert_eq!(k.port_a, 80);
        assert_eq!(k.port_b, 9000);
        assert!(!src_is_a);
    }

    #[test]
    fn both_directions_fold_into_one_flow() {
        let packets = vec![
            pkt(0.0, "192.168.1.5", 45000, "10.0.0.2", 80, 60, TCP_SYN),
            pkt(0.1, "10.0.0.2", 80, "192.168.1.5", 45000, 60, TCP_SYN | TCP_ACK),
            pkt(0.2, "192.168.1.5", 45000, "10.0.0.2", 80, 1500, TCP_ACK | TCP_PSH),
        ];
        let out = aggregate_packets(&packets, DEFAULT_IDLE_TIMEOUT).unwrap();
        assert_eq!(out.flows.len(), 1);
        assert_eq!(out.rejected_packets, 0);
        let flow = &out.flows[0];
        // The client spoke first, so forward is client -> server.
        assert_eq!(flow.src_ip().to_string(), "192.168.1.5");
        assert_eq!(flow.dst_port(), 80);
        assert_eq!(flow.fwd.packets, 2);
        assert_eq!(flow.bwd.packets, 1);
        assert_eq!(flow.fwd.bytes, 1560);
        assert_eq!(flow.bwd.bytes, 60);
        assert_eq!(flow.flags.syn, 2);
        assert_eq!(flow.flags.ack, 2);
        assert_eq!(flow.flags.psh, 1);
        assert_eq!(flow.duration, 0.2);
    }

    #[test]
    fn idle_gap_splits_into_two_flows() {
        // Oracle: gaps of exactly the timeout stay together, strictly larger
        // gaps split. With timeout 120 and packets at 0, 120, 240.5 the first
        // two share a flow and the third starts a new one.
        let packets = vec![
            pkt(0.0, "10.0.0.1", 1111, "10.0.0.2", 2222, 100, 0),
            pkt(120.0, "10.0.0.1", 1111, "10.0.0.2", 2222, 100, 0),
            pkt(240.5, "10.0.0.1", 1111, "10.0.0.2", 2222, 100, 0),
        ];
        let out = aggregate_packets(&packets, 120.0).unwrap();
        assert_eq!(out.flows.len(), 2);
        assert_eq!(out.flows[0].fwd.packets, 2);
        assert_eq!(out.flows[0].start_time, 0.0);
        assert_eq!(out.flows[0].end_time, 120.0);
        assert_eq!(out.flows[1].fwd.packets, 1);
        assert_eq!(out.flows[1].start_time, 240.5);
        assert_eq!(out.flows[1].duration, 0.0);
    }

    #[test]
    fn direction_resets_after_idle_split() {
        // After a split the first packet of the new run defines forward, even
        // if the server opens the second round.
        let packets = vec![
            pkt(0.0, "10.0.0.1", 1111, "10.0.0.2", 2222, 100, 0),
            pkt(500.0, "10.0.0.2", 2222, "10.0.0.1", 1111, 70, 0),
        ];
        let out = aggregate_packets(&packets, 120.0).unwrap();
        assert_eq!(out.flows.len(), 2);
        assert_eq!(out.flows[0].src_ip().to_string(), "10.0.0.1");
        assert_eq!(out.flows[1].src_ip().to_string(), "10.0.0.2");
        assert_eq!(out.flows[1].fwd.packets, 1);
        assert_eq!(out.flows[1].bwd.packets, 0);
        assert_eq!(out.flows[1].bwd.min_ps, 0.0);
    }

    #[test]
    fn aggregation_is_permutation_invariant() {
        let mut packets = vec![
            pkt(3.0, "10.0.0.1", 1111, "10.0.0.2", 80, 100, TCP_ACK),
            pkt(1.0, "10.0.0.1", 1111, "10.0.0.2", 80, 60, TCP_SYN),
            pkt(2.0, "10.0.0.2", 80, "10.0.0.1", 1111, 60, TCP_SYN | TCP_ACK),
            pkt(1.5, "10.0.0.3", 53, "10.0.0.4", 41000, 90, 0),
        ];
        let forward = aggregate_packets(&packets, 120.0).unwrap();
        packets.reverse();
        let reversed = aggregate_packets(&packets, 120.0).unwrap();
        assert_eq!(forward, reversed);
        packets.swap(0, 2);
        packets.swap(1, 3);
        let shuffled = aggregate_packets(&packets, 120.0).unwrap();
        assert_eq!(forward, shuffled);
    }

    #[test]
    fn bad_packets_are_counted_not_fatal() {
        let mut bad = pkt(0.0, "not-an-ip", 1, "10.0.0.2", 2, 10, 0);
        let good = pkt(1.0, "10.0.0.1", 1, "10.0.0.2", 2, 10, 0);
        let out = aggregate_packets(&[bad.clone(), good.clone()], 120.0).unwrap();
        assert_eq!(out.flows.len(), 1);
        assert_eq!(out.rejected_packets, 1);

        bad = pkt(f64::NAN, "10.0.0.1", 1, "10.0.0.2", 2, 10, 0);
        let out = aggregate_packets(&[bad, good], 120.0).unwrap();
        assert_eq!(out.rejected_packets, 1);
    }

    #[test]
    fn zero_timeout_is_rejected() {
        let err = aggregate_packets(&[], 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParam(_)));
        assert!(aggregate_packets(&[], -5.0).is_err());
        assert!(aggregate_packets(&[], f64::NAN).is_err());
    }

    #[test]
    fn empty_input_yields_empty_output() {
        let out = aggregate_packets(&[], 120.0).unwrap();
        assert!(out.flows.is_empty());
        assert_eq!(out.rejected_packets, 0);
    }

    #[test]
    fn label_invariant_is_enforced() {
        assert!(ScenarioLabel::attack(FlowClass::Benign, "udp flood", ChargingState::Idle).is_err());
        assert!(ScenarioLabel::attack(FlowClass::Dos, "none", ChargingState::Idle).is_err());
        let label = ScenarioLabel::attack(FlowClass::Dos, "udp flood", ChargingState::Idle).unwrap();
        assert!(label.class.is_malicious());
        assert_eq!(ScenarioLabel::benign(ChargingState::Charging).attack, "none");
    }

    #[test]
    fn class_text_round_trips() {
        for class in [FlowClass::Benign, FlowClass::Recon, FlowClass::Dos] {
            assert_eq!(FlowClass::parse(&class.to_string()).unwrap(), class);
        }
        assert_eq!(FlowClass::parse("DoS").unwrap(), FlowClass::Dos);
        assert!(FlowClass::parse("weird").is_err());
    }
}
