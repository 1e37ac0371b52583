//! Conventions of the Lycos2017 flow CSVs: column names, hold-out classes and
//! the reference row order of the per-class AUROC table.

pub const LABEL_COLUMN: &str = "label";
pub const BENIGN_LABEL: &str = "benign";

/// Classes that appear only in the test split.
pub const HOLDOUT_CLASSES: [&str; 2] = ["heartbleed", "webattack_sql_injection"];

/// Identifier columns that carry no flow statistics.
pub const ID_COLUMNS: [&str; 5] = ["flow_id", "src_addr", "dst_addr", "timestamp", "src_port"];

/// Report row order. The first entry of each list is the display name; the
/// rest are label spellings accepted from CSVs.
pub const REPORT_ORDER: [&[&str]; 13] = [
    &["Botnet", "bot", "botnet"],
    &["DDoS", "ddos"],
    &["DoS (Golden Eye)", "dos_goldeneye", "dos goldeneye"],
    &["DoS (Hulk)", "dos_hulk", "dos hulk"],
    &["DoS (Slow HTTP Test)", "dos_slowhttptest", "dos slowhttptest"],
    &["DoS (Slow Loris)", "dos_slowloris", "dos slowloris"],
    &["FTP Patator", "ftp_patator", "ftp-patator"],
    &["Portscan", "portscan"],
    &["SSH Patator (Brute Force)", "ssh_patator", "ssh-patator"],
    &["Web Attack (Brute Force)", "webattack_bruteforce", "web attack brute force"],
    &["Web Attack (XSS)", "webattack_xss", "web attack xss"],
    &["Heartbleed", "heartbleed"],
    &["Web Attack (SQL Injection)", "webattack_sql_injection", "web attack sql injection"],
];
