//! Line-oriented dump of one scheduled realization.
//!
//! ```text
//! # d2d-csma snapshot v1
//! META <policy> <p_A> <seed> <realization> <r_d2d> <exclusion|none>
//! WINDOW <x_min> <x_max> <y_min> <y_max> <plain|torus>
//! TX <index> <x> <y> <mark> <bid> <retained 0|1> <files a,b,c|->
//! RX <index> <x> <y> <request> <server|->
//! ```
//!
//! Floats are written in shortest round-trip form, so parsing a dump restores
//! it exactly.

use std::fmt::Write as _;

use crate::bidding::bid_table_with;
use crate::channel::CoverageModel;
use crate::content::FileId;
use crate::evaluation::{schedule, Realization, Scenario, Stream, Streams};
use crate::geometry::{BoundaryMode, Point, Window};
use crate::scheduling::{MarkAssignment, Policy};
use crate::{Error, Result};

const MAGIC: &str = "# d2d-csma snapshot v1";

#[derive(Debug, Clone, PartialEq)]
pub struct TxRecord {
    pub position: Point,
    pub mark: f64,
    pub bid: f64,
    pub retained: bool,
    pub files: Vec<FileId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RxRecord {
    pub position: Point,
    pub request: FileId,
    pub server: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotDump {
    pub policy: Policy,
    pub p_a: f64,
    pub seed: u64,
    pub realization: u64,
    pub r_d2d: f64,
    pub exclusion: Option<f64>,
    pub window: Window,
    pub transmitters: Vec<TxRecord>,
    pub receivers: Vec<RxRecord>,
}

impl SnapshotDump {
    /// Schedules realization `index` of `seed` and records the outcome.
    ///
    /// Bids are always recorded, using the scenario's scoring mode, even for
    /// policies that do not read them.
    pub fn capture(scenario: &Scenario, policy: Policy, p_a: f64, seed: u64, index: u64) -> Result<Self> {
        scenario.validate()?;
        let coverage = CoverageModel::new(scenario.channel)?;
        let streams = Streams::new(seed, index);
        let realization = Realization::sample(scenario, &streams)?;
        let marks = MarkAssignment::sample(realization.transmitters.len(), &mut streams.rng(Stream::Marks));
        let sched = schedule(&realization, &marks, policy, p_a, scenario, &coverage)?;
        let bids = match &sched.bids {
            Some(b) => b.clone(),
            None => bid_table_with(
                &realization,
                sched.r_d2d,
                p_a * scenario.lambda_t,
                &coverage,
                scenario.scoring,
            ),
        };
        let transmitters = (0..realization.transmitters.len())
            .map(|i| TxRecord {
                position: realization.transmitters.get(i),
                mark: marks.get(i),
                bid: bids.get(i),
                retained: sched.retained.contains(i),
                files: realization.caches[i].files().to_vec(),
            })
            .collect();
        let receivers = (0..realization.receivers.len())
            .map(|u| RxRecord {
                position: realization.receivers.get(u),
                request: realization.requests[u],
                server: sched.association.server(u),
            })
            .collect();
        Ok(SnapshotDump {
            policy,
            p_a,
            seed,
            realization: index,
            r_d2d: sched.r_d2d,
            exclusion: sched.exclusion,
            window: *realization.window(),
            transmitters,
            receivers,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let w = &self.window;
        let exclusion = self.exclusion.map_or("none".to_string(), |d| d.to_string());
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(
            s,
            "META {} {} {} {} {} {}",
            self.policy, self.p_a, self.seed, self.realization, self.r_d2d, exclusion
        )
        .unwrap();
        writeln!(
            s,
            "WINDOW {} {} {} {} {}",
            w.x_min(),
            w.x_max(),
            w.y_min(),
            w.y_max(),
            w.mode().as_str()
        )
        .unwrap();
        for (i, t) in self.transmitters.iter().enumerate() {
            let files = if t.files.is_empty() {
                "-".to_string()
            } else {
                t.files.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(",")
            };
            writeln!(
                s,
                "TX {i} {} {} {} {} {} {files}",
                t.position.x,
                t.position.y,
                t.mark,
                t.bid,
                u8::from(t.retained)
            )
            .unwrap();
        }
        for (u, r) in self.receivers.iter().enumerate() {
            let server = r.server.map_or("-".to_string(), |x| x.to_string());
            writeln!(s, "RX {u} {} {} {} {server}", r.position.x, r.position.y, r.request).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
        let fail = |line: usize, reason: &str| Error::Format {
            what: "snapshot",
            line,
            reason: reason.to_string(),
        };
        match lines.next() {
            Some((_, l)) if l.trim() == MAGIC => {}
            _ => return Err(fail(1, "missing snapshot header")),
        }

        let mut meta = None;
        let mut window = None;
        let mut transmitters = Vec::new();
        let mut receivers = Vec::new();
        for (line, raw) in lines {
            let fields: Vec<&str> = raw.split_whitespace().collect();
            let Some((&tag, rest)) = fields.split_first() else {
                continue;
            };
            let num = |k: usize| -> Result<f64> {
                rest.get(k)
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| fail(line, &format!("field {} is not a number", k + 2)))
            };
            let int = |k: usize| -> Result<u64> {
                rest.get(k)
                    .and_then(|v| v.parse::<u64>().ok())
                    .ok_or_else(|| fail(line, &format!("field {} is not an integer", k + 2)))
            };
            let optional = |k: usize, none: &str| -> Result<Option<&str>> {
                match rest.get(k) {
                    Some(&v) if v == none => Ok(None),
                    Some(&v) => Ok(Some(v)),
                    None => Err(fail(line, "missing field")),
                }
            };
            let expect_len = |n: usize| {
                if rest.len() == n {
                    Ok(())
                } else {
                    Err(fail(
                        line,
                        &format!("expected {n} fields after {tag}, found {}", rest.len()),
                    ))
                }
            };
            match tag {
                "META" => {
                    expect_len(6)?;
                    let policy = rest[0].parse::<Policy>().map_err(|e| fail(line, &e.to_string()))?;
                    let exclusion = optional(5, "none")?
                        .map(|v| v.parse::<f64>().map_err(|_| fail(line, "bad exclusion radius")))
                        .transpose()?;
                    meta = Some((policy, num(1)?, int(2)?, int(3)?, num(4)?, exclusion));
                }
                "WINDOW" => {
                    expect_len(5)?;
                    let mode = rest[4].parse::<BoundaryMode>().map_err(|e| fail(line, &e))?;
                    window = Some(
                        Window::new(num(0)?, num(1)?, num(2)?, num(3)?, mode)
                            .map_err(|e| fail(line, &e.to_string()))?,
                    );
                }
                "TX" => {
                    expect_len(7)?;
                    if int(0)? as usize != transmitters.len() {
                        return Err(fail(line, "transmitter indices must be consecutive from 0"));
                    }
                    let retained = match rest[5] {
                        "0" => false,
                        "1" => true,
                        _ => return Err(fail(line, "retained flag must be 0 or 1")),
                    };
                    let files = match optional(6, "-")? {
                        None => Vec::new(),
                        Some(list) => list
                            .split(',')
                            .map(|f| f.parse::<FileId>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| fail(line, "bad file list"))?,
                    };
                    transmitters.push(TxRecord {
                        position: Point::new(num(1)?, num(2)?),
                        mark: num(3)?,
                        bid: num(4)?,
                        retained,
                        files,
                    });
                }
                "RX" => {
                    expect_len(5)?;
                    if int(0)? as usize != receivers.len() {
                        return Err(fail(line, "receiver indices must be consecutive from 0"));
                    }
                    let server = optional(4, "-")?
                        .map(|v| v.parse::<usize>().map_err(|_| fail(line, "bad server index")))
                        .transpose()?;
                    receivers.push(RxRecord {
                        position: Point::new(num(1)?, num(2)?),
                        request: int(3)? as FileId,
                        server,
                    });
                }
                t if t.starts_with('#') => {}
                other => return Err(fail(line, &format!("unknown record type `{other}`"))),
            }
        }
        let (policy, p_a, seed, realization, r_d2d, exclusion) = meta.ok_or_else(|| fail(0, "missing META record"))?;
        let window = window.ok_or_else(|| fail(0, "missing WINDOW record"))?;
        Ok(SnapshotDump {
            policy,
            p_a,
            seed,
            realization,
            r_d2d,
            exclusion,
            window,
            transmitters,
            receivers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn captured_dump_round_trips() {
        let scenario = Scenario {
            window: Window::centered_square(2.0, BoundaryMode::Plain).unwrap(),
            ..Scenario::default()
        };
        let dump = SnapshotDump::capture(&scenario, Policy::BiddingMatern, 0.5, 9, 0).unwrap();
        assert!(!dump.transmitters.is_empty());
        let text = dump.to_text();
        assert_eq!(SnapshotDump::parse(&text).unwrap(), dump);
        assert!(dump.transmitters.iter().any(|t| t.retained));
    }

    #[test]
    fn rejects_garbage() {
        assert!(SnapshotDump::parse("").is_err());
        let bad = format!("{MAGIC}\nMETA random 0.5 1 0 1.7 none\nWINDOW -1 1 -1 1 plain\nTX 0 0 0 x 0 1 -\n");
        let err = SnapshotDump::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("line 4"), "{err}");
        let unknown = format!("{MAGIC}\nFOO 1\n");
        assert!(SnapshotDump::parse(&unknown).is_err());
    }
}
