//! Shared fixtures for the CLI integration tests: deterministic synthetic
//! flow and packet tables, plus helpers for invoking the built binary.

// Each integration-test target compiles this module separately, and not
// every target uses every helper.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

/// The core flow-table header, in canonical column order.
pub const CORE_HEADER: &str = "src_ip,dst_ip,src_port,dst_port,protocol,start_time,end_time,\
duration,packets_fwd,packets_bwd,bytes_fwd,bytes_bwd,fwd_min_ps,fwd_max_ps,fwd_mean_ps,\
bwd_min_ps,bwd_max_ps,bwd_mean_ps,syn_count,ack_count,psh_count,rst_count,fin_count,urg_count";

/// Deterministic synthetic flow table. `label` appends the three label
/// columns to every row; `shift` moves the byte/packet scale so shifted
/// tables look nothing like unshifted ones.
pub fn flow_csv(rows: usize, label: Option<(&str, &str, &str)>, shift: f64) -> String {
    let mut text = String::from(CORE_HEADER);
    if label.is_some() {
        text.push_str(",label_class,label_attack,label_state");
    }
    text.push('\n');
    for i in 0..rows {
        // Small co-prime cycles give every column some variance without
        // randomness, so fixtures are stable across runs and platforms.
        let start = 100.0 + i as f64;
        let duration = 0.5 + (i % 7) as f64 * 0.25;
        let packets_fwd = 2 + (i % 5) as u64;
        let packets_bwd = 1 + (i % 3) as u64;
        let bytes_fwd = ((packets_fwd * 120) as f64 * (1.0 + shift)) as u64;
        let bytes_bwd = ((packets_bwd * 90) as f64 * (1.0 + shift)) as u64;
        let mean_fwd = bytes_fwd as f64 / packets_fwd as f64;
        let mean_bwd = bytes_bwd as f64 / packets_bwd as f64;
        let row = format!(
            "10.0.0.{},10.0.0.250,{},443,6,{start},{},{duration},{packets_fwd},{packets_bwd},\
{bytes_fwd},{bytes_bwd},60,1500,{mean_fwd},60,1200,{mean_bwd},1,{},{},0,1,0",
            i % 5 + 1,
            40000 + i,
            start + duration,
            packets_fwd + packets_bwd,
            i % 4,
        );
        text.push_str(&row);
        if let Some((class, attack, state)) = label {
            text.push_str(&format!(",{class},{attack},{state}"));
        }
        text.push('\n');
    }
    text
}

/// Deterministic packet table: two 5-tuples, one of which goes idle for
/// 500 seconds mid-capture so idle timeouts below that split it in two.
pub fn packet_csv() -> String {
    let mut text =
        String::from("timestamp,src_ip,dst_ip,src_port,dst_port,protocol,length,tcp_flags\n");
    for i in 0..20 {
        let t = 1000.0 + i as f64 * 2.0;
        text.push_str(&format!("{t},10.0.0.1,10.0.0.2,5000,443,6,{},16\n", 100 + i));
    }
    for i in 0..10 {
        // Burst, 500 s of silence, second burst.
        let t = 1000.0 + i as f64 + if i >= 5 { 500.0 } else { 0.0 };
        text.push_str(&format!("{t},10.0.0.3,10.0.0.2,6000,80,6,{},24\n", 200 + i));
    }
    text
}

/// A one-entry manifest labeling `file` as benign charging traffic.
pub fn benign_manifest(file: &str) -> String {
    format!(r#"[{{"path": "{file}", "class": "benign", "attack": "none", "state": "charging"}}]"#)
}

/// Command for the built `falconc` binary, isolated from ambient
/// environment that would change its behavior.
pub fn falconc(dir: &Path) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_falconc"));
    cmd.current_dir(dir);
    cmd.env_remove("FALCONC_CONFIG");
    cmd.env_remove("SOURCE_DATE_EPOCH");
    cmd
}

/// Runs the command, asserting success, and returns captured output.
pub fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("spawn falconc");
    assert!(
        output.status.success(),
        "command failed with {:?}\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

/// Runs the command, asserting it fails with `code`, and returns stderr.
pub fn run_err(cmd: &mut Command, code: i32) -> String {
    let output = cmd.output().expect("spawn falconc");
    assert_eq!(
        output.status.code(),
        Some(code),
        "expected exit code {code}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Writes `text` under `dir` and returns the full path as a string.
pub fn write_file(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).expect("write fixture");
    path.display().to_string()
}
