use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::SchemeId;
use crate::error::{Error, Result};

/// Raw record of one large slot, enough to rebuild every metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotLog {
    pub episode: usize,
    pub large: usize,
    /// Switching cost of the executed placement (s).
    pub switch_cost: f64,
    /// Over-capacity penalty of the raw selection (s).
    pub penalty: f64,
    /// QoS sum over TDs, one entry per small slot.
    pub qos: Vec<f64>,
    /// TDs over a threshold, one entry per small slot.
    pub violations: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeMetrics {
    pub u_large: f64,
    pub u_small: f64,
    pub switch_cost: f64,
    pub violations: usize,
    /// Undiscounted sum of agent rewards.
    pub reward: f64,
}

/// `U_large = sum_i (sum_k sum_n Q - delta * cost_i)`; `U_small` is the
/// per-slot `(1/N) sum_n Q` averaged over all small slots.
pub fn episode_metrics(slots: &[SlotLog], cost_balance: f64, num_tds: usize) -> EpisodeMetrics {
    let mut m = EpisodeMetrics {
        u_large: 0.0,
        u_small: 0.0,
        switch_cost: 0.0,
        violations: 0,
        reward: 0.0,
    };
    let mut small_slots = 0usize;
    for s in slots {
        let q: f64 = s.qos.iter().sum();
        m.u_large += q - cost_balance * s.switch_cost;
        m.reward += q - s.switch_cost - s.penalty;
        m.switch_cost += s.switch_cost;
        m.violations += s.violations.iter().sum::<usize>();
        for &qk in &s.qos {
            m.u_small += qk / num_tds as f64;
        }
        small_slots += s.qos.len();
    }
    if small_slots > 0 {
        m.u_small /= small_slots as f64;
    }
    m
}

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub scheme: SchemeId,
    pub value: Option<f64>,
    pub replication: usize,
    pub episode: usize,
    pub u_large: f64,
    pub u_small: f64,
    pub switch_cost: f64,
    pub violations: usize,
    pub wall_time: f64,
}

pub const METRICS_HEADER: &str = "scheme,value,replication,episode,u_large,u_small,switch_cost,violations,wall_time";

impl MetricsRow {
    pub fn new(scheme: SchemeId, value: Option<f64>, replication: usize, episode: usize, m: &EpisodeMetrics) -> Self {
        Self {
            scheme,
            value,
            replication,
            episode,
            u_large: m.u_large,
            u_small: m.u_small,
            switch_cost: m.switch_cost,
            violations: m.violations,
            wall_time: 0.0,
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        for (name, v) in [
            ("u_large", self.u_large),
            ("u_small", self.u_small),
            ("switch_cost", self.switch_cost),
            ("wall_time", self.wall_time),
        ] {
            if !v.is_finite() {
                return Err(Error::Diverged(format!(
                    "{name} = {v} for {} value {} replication {} episode {}",
                    self.scheme,
                    fmt_value(self.value),
                    self.replication,
                    self.episode
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.scheme,
            fmt_value(self.value),
            self.replication,
            self.episode,
            self.u_large,
            self.u_small,
            self.switch_cost,
            self.violations,
            self.wall_time
        )
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let bad = |what: &str| Error::Integrity(format!("malformed metrics row ({what}): {line}"));
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 9 {
            return Err(bad("field count"));
        }
        let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
        let int = |s: &str, what: &str| s.parse::<usize>().map_err(|_| bad(what));
        Ok(Self {
            scheme: f[0].parse().map_err(|_| bad("scheme"))?,
            value: if f[1].is_empty() { None } else { Some(num(f[1], "value")?) },
            replication: int(f[2], "replication")?,
            episode: int(f[3], "episode")?,
            u_large: num(f[4], "u_large")?,
            u_small: num(f[5], "u_small")?,
            switch_cost: num(f[6], "switch_cost")?,
            violations: int(f[7], "violations")?,
            wall_time: num(f[8], "wall_time")?,
        })
    }

    /// Sort key; rows are written in this order.
    pub fn key(&self) -> (SchemeId, u64, usize, usize) {
        (self.scheme, self.value.map_or(0, f64::to_bits), self.replication, self.episode)
    }

    /// Fields a detail log can reproduce (everything but wall time).
    pub fn same_metrics(&self, other: &Self) -> bool {
        Self { wall_time: 0.0, ..self.clone() } == Self { wall_time: 0.0, ..other.clone() }
    }
}

pub fn fmt_value(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(Error::Integrity("metrics.csv header mismatch".into()));
    }
    lines.filter(|l| !l.is_empty()).map(MetricsRow::from_csv).collect()
}

/// First line of a detail log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogHeader {
    pub scheme: SchemeId,
    pub value: Option<f64>,
    pub replication: usize,
    pub cost_balance: f64,
    pub num_tds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checksum {
    sha256: String,
}

/// JSON lines: header, one line per slot, then the SHA-256 of all preceding bytes.
pub fn encode_detail_log(header: &LogHeader, slots: &[SlotLog]) -> String {
    let mut body = serde_json::to_string(header).expect("header serializes");
    body.push('\n');
    for s in slots {
        body.push_str(&serde_json::to_string(s).expect("slot serializes"));
        body.push('\n');
    }
    let digest = hex::encode(Sha256::digest(body.as_bytes()));
    let _ = writeln!(body, "{}", serde_json::to_string(&Checksum { sha256: digest }).expect("checksum serializes"));
    body
}

pub fn decode_detail_log(text: &str) -> Result<(LogHeader, Vec<SlotLog>)> {
    let trimmed = text.strip_suffix('\n').unwrap_or(text);
    let split = trimmed.rfind('\n').ok_or_else(|| Error::Integrity("detail log too short".into()))?;
    let (body, last) = (&text[..split + 1], &trimmed[split + 1..]);
    let sum: Checksum = serde_json::from_str(last).map_err(|e| Error::Integrity(format!("checksum line: {e}")))?;
    if hex::encode(Sha256::digest(body.as_bytes())) != sum.sha256 {
        return Err(Error::Integrity("detail log checksum mismatch".into()));
    }
    let mut lines = body.lines();
    let header: LogHeader = serde_json::from_str(lines.next().unwrap_or_default())
        .map_err(|e| Error::Integrity(format!("log header: {e}")))?;
    let slots = lines
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Integrity(format!("slot line: {e}"))))
        .collect::<Result<Vec<SlotLog>>>()?;
    Ok((header, slots))
}

/// Rebuilds the metric rows of a detail log, wall time zero.
pub fn recompute_metrics(header: &LogHeader, slots: &[SlotLog]) -> Vec<MetricsRow> {
    let mut rows = Vec::new();
    let mut start = 0;
    while start < slots.len() {
        let episode = slots[start].episode;
        let end = start + slots[start..].iter().take_while(|s| s.episode == episode).count();
        let m = episode_metrics(&slots[start..end], header.cost_balance, header.num_tds);
        rows.push(MetricsRow::new(header.scheme, header.value, header.replication, episode, &m));
        start = end;
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slot(episode: usize, large: usize, cost: f64, qos: Vec<f64>) -> SlotLog {
        let k = qos.len();
        SlotLog {
            episode,
            large,
            switch_cost: cost,
            penalty: 0.0,
            qos,
            violations: vec![0; k],
        }
    }

    #[test]
    fn u_large_example() {
        // total QoS 500 and 80 s of switching at delta = 0.001
        let slots = [slot(0, 0, 80.0, vec![250.0, 250.0])];
        let m = episode_metrics(&slots, 0.001, 20);
        assert!((m.u_large - 499.92).abs() <= 1e-9 * 499.92);
        assert_eq!(m.switch_cost, 80.0);
    }

    #[test]
    fn hand_two_slot_log() {
        let slots = [slot(3, 0, 10.0, vec![1.5, 0.5]), slot(3, 1, 0.0, vec![-1.0, 2.0])];
        let m = episode_metrics(&slots, 0.5, 2);
        // (2 - 5) + 1
        assert_eq!(m.u_large, -2.0);
        // (0.75 + 0.25 - 0.5 + 1) / 4
        assert_eq!(m.u_small, 0.375);
        assert_eq!(m.reward, 3.0 - 10.0);
    }

    #[test]
    fn negative_u_small_is_kept() {
        let mut s = slot(0, 0, 0.0, vec![-2.0]);
        s.violations = vec![1];
        let m = episode_metrics(&[s], 0.001, 1);
        assert_eq!(m.u_small, -2.0);
        assert_eq!(m.violations, 1);
    }

    #[test]
    fn csv_round_trip() {
        let m = episode_metrics(&[slot(0, 0, 1.0 / 3.0, vec![0.1, 0.7])], 0.001, 3);
        let rows = vec![
            MetricsRow::new(SchemeId::GaAll, Some(22.5), 1, 4, &m),
            MetricsRow::new(SchemeId::DglDdpg, None, 0, 0, &m),
        ];
        let text = metrics_csv(&rows);
        assert!(text.starts_with("scheme,value,replication,episode,u_large,u_small,switch_cost,violations,wall_time\n"));
        assert_eq!(parse_metrics_csv(&text).unwrap(), rows);
    }

    #[test]
    fn detail_log_round_trip_and_tamper() {
        let header = LogHeader {
            scheme: SchemeId::RandomOff,
            value: Some(3.0),
            replication: 2,
            cost_balance: 0.001,
            num_tds: 4,
        };
        let slots = vec![
            slot(0, 0, 12.345678901234567, vec![0.1 + 0.2, 1e-300]),
            slot(1, 0, 0.0, vec![-0.3, 2.0]),
        ];
        let text = encode_detail_log(&header, &slots);
        let (h, s) = decode_detail_log(&text).unwrap();
        assert_eq!((h, s.clone()), (header.clone(), slots.clone()));
        let rows = recompute_metrics(&header, &s);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].episode, 1);

        let tampered = text.replacen("12.345678901234567", "12.345678901234568", 1);
        assert!(matches!(decode_detail_log(&tampered), Err(Error::Integrity(_))));
    }
}
