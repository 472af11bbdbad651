//! Line-oriented text formats for traces and token seedings.
//!
//! Both trace formats open with the graph (`n`, `m`, `e u v` lines), the
//! initial token distribution (`init node token` lines) and the run seed.
//! Synchronous traces then carry one block per round:
//!
//! ```text
//! round <r>
//! p <proposer> <target>        proposals
//! a <proposer> <acceptor>      accepted connections
//! t <from> <to> <token>        applied transfers, in execution order
//! ```
//!
//! terminated by `complete <round>` or `complete none`. Advertisements are
//! not serialized; they are a pure function of the replayed state and are
//! rebuilt on parse (assuming the diffusion tag rule).
//!
//! Asynchronous traces carry one `ev <time> <kind> ...` line per event and
//! close with `complete <tick>|none` and `end <tick>`. Fingerprints are
//! hex; a `sel` line lists the candidate set as a comma list or `-`.
//!
//! Serialization is deterministic: equal traces produce byte-identical
//! text.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::amtm::{AsyncTrace, DelayBounds, EventKind, TraceEvent};
use crate::behavior::Transfer;
use crate::graph::{Graph, GraphError, NodeId};
use crate::sync::{RoundRecord, SyncTrace};
use crate::token::{Tag, TokenId, TokenSet};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, TraceError> {
    Err(TraceError::Parse { line: line + 1, msg: msg.into() })
}

// ---------------------------------------------------------------------------
// Shared header
// ---------------------------------------------------------------------------

fn write_header(out: &mut String, kind: &str, g: &Graph, initial: &[BTreeSet<TokenId>], seed: u64) {
    let _ = writeln!(out, "mtm-trace {kind} 1");
    let _ = writeln!(out, "n {}", g.node_count());
    let _ = writeln!(out, "m {}", g.edge_count());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "e {u} {v}");
    }
    for (node, tokens) in initial.iter().enumerate() {
        for t in tokens {
            let _ = writeln!(out, "init {node} {t}");
        }
    }
    let _ = writeln!(out, "seed {seed}");
}

struct Header {
    graph: Graph,
    initial: Vec<BTreeSet<TokenId>>,
    seed: u64,
    /// Index of the first unconsumed line.
    next: usize,
}

fn parse_header(lines: &[&str], kind: &str) -> Result<Header, TraceError> {
    let mut i = 0;
    let magic = format!("mtm-trace {kind} 1");
    if lines.first().copied() != Some(magic.as_str()) {
        return err(0, format!("expected header `{magic}`"));
    }
    i += 1;
    let n: usize = field(lines, i, "n")?;
    i += 1;
    let m: usize = field(lines, i, "m")?;
    i += 1;
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let parts = tagged(lines, i, "e", 2)?;
        edges.push((parse(parts[0], i)?, parse(parts[1], i)?));
        i += 1;
    }
    let mut initial = vec![BTreeSet::new(); n];
    while i < lines.len() && lines[i].starts_with("init ") {
        let parts = tagged(lines, i, "init", 2)?;
        let node: usize = parse(parts[0], i)?;
        if node >= n {
            return err(i, format!("init node {node} out of range"));
        }
        initial[node].insert(TokenId(parse(parts[1], i)?));
        i += 1;
    }
    let seed: u64 = field(lines, i, "seed")?;
    i += 1;
    Ok(Header {
        graph: Graph::from_edge_list(n, &edges)?,
        initial,
        seed,
        next: i,
    })
}

fn field<T: std::str::FromStr>(lines: &[&str], i: usize, tag: &str) -> Result<T, TraceError> {
    let parts = tagged(lines, i, tag, 1)?;
    parse(parts[0], i)
}

fn tagged<'a>(
    lines: &[&'a str],
    i: usize,
    tag: &str,
    arity: usize,
) -> Result<Vec<&'a str>, TraceError> {
    let Some(line) = lines.get(i) else {
        return err(i, format!("expected `{tag}`, found end of input"));
    };
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) {
        return err(i, format!("expected `{tag}` line, found `{line}`"));
    }
    let rest: Vec<&str> = parts.collect();
    if rest.len() != arity {
        return err(i, format!("`{tag}` expects {arity} fields, found {}", rest.len()));
    }
    Ok(rest)
}

fn parse<T: std::str::FromStr>(token: &str, i: usize) -> Result<T, TraceError> {
    token
        .parse()
        .map_err(|_| TraceError::Parse { line: i + 1, msg: format!("bad value `{token}`") })
}

fn node(token: &str, i: usize, n: usize) -> Result<NodeId, TraceError> {
    let id: u32 = parse(token, i)?;
    if id as usize >= n {
        return err(i, format!("node {id} out of range"));
    }
    Ok(NodeId(id))
}

// ---------------------------------------------------------------------------
// Synchronous traces
// ---------------------------------------------------------------------------

pub fn sync_to_text(trace: &SyncTrace) -> String {
    let mut out = String::new();
    write_header(&mut out, "sync", &trace.graph, &trace.initial, trace.seed);
    for record in &trace.rounds {
        let _ = writeln!(out, "round {}", record.round);
        for (proposer, target) in &record.proposals {
            let _ = writeln!(out, "p {proposer} {target}");
        }
        for (proposer, acceptor) in &record.accepted {
            let _ = writeln!(out, "a {proposer} {acceptor}");
        }
        for t in &record.transfers {
            let _ = writeln!(out, "t {} {} {}", t.from, t.to, t.token);
        }
    }
    match trace.completion {
        Some(r) => {
            let _ = writeln!(out, "complete {r}");
        }
        None => {
            let _ = writeln!(out, "complete none");
        }
    }
    out
}

pub fn sync_from_text(text: &str) -> Result<SyncTrace, TraceError> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let header = parse_header(&lines, "sync")?;
    let n = header.graph.node_count();

    let mut sets: Vec<TokenSet> = header
        .initial
        .iter()
        .map(|s| TokenSet::from_tokens(s.iter().copied()))
        .collect();

    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut completion = None;
    let mut i = header.next;
    while i < lines.len() {
        let line = lines[i];
        if let Some(rest) = line.strip_prefix("complete ") {
            completion = match rest {
                "none" => None,
                r => Some(parse(r, i)?),
            };
            i += 1;
            if i != lines.len() {
                return err(i, "trailing content after `complete`");
            }
            break;
        }
        let round: u32 = field(&lines, i, "round")?;
        i += 1;
        // Advertisements are the diffusion tags of the replayed state.
        let ads = header
            .graph
            .nodes()
            .map(|u| (u, sets[u.index()].tag(u)))
            .collect();
        let mut record = RoundRecord {
            round,
            ads,
            proposals: Default::default(),
            accepted: Vec::new(),
            transfers: Vec::new(),
        };
        while i < lines.len() && lines[i].starts_with("p ") {
            let parts = tagged(&lines, i, "p", 2)?;
            record
                .proposals
                .insert(node(parts[0], i, n)?, node(parts[1], i, n)?);
            i += 1;
        }
        while i < lines.len() && lines[i].starts_with("a ") {
            let parts = tagged(&lines, i, "a", 2)?;
            record
                .accepted
                .push((node(parts[0], i, n)?, node(parts[1], i, n)?));
            i += 1;
        }
        while i < lines.len() && lines[i].starts_with("t ") {
            let parts = tagged(&lines, i, "t", 3)?;
            let t = Transfer {
                from: node(parts[0], i, n)?,
                to: node(parts[1], i, n)?,
                token: TokenId(parse(parts[2], i)?),
            };
            sets[t.to.index()].insert(t.token);
            record.transfers.push(t);
            i += 1;
        }
        rounds.push(record);
    }

    Ok(SyncTrace {
        graph: header.graph,
        initial: header.initial,
        rounds,
        completion,
        seed: header.seed,
    })
}

// ---------------------------------------------------------------------------
// Asynchronous traces
// ---------------------------------------------------------------------------

fn write_event(out: &mut String, ev: &TraceEvent) {
    let t = ev.time;
    match &ev.kind {
        EventKind::Update { node, tag } => {
            let _ = writeln!(out, "ev {t} upd {node} {:016x} {}", tag.fingerprint, tag.size);
        }
        EventKind::AdDeliver { src, dst, tag } => {
            let _ = writeln!(
                out,
                "ev {t} ad {src} {dst} {:016x} {}",
                tag.fingerprint, tag.size
            );
        }
        EventKind::LoopWake { node } => {
            let _ = writeln!(out, "ev {t} wake {node}");
        }
        EventKind::Select { node, candidates, chosen } => {
            let cands = if candidates.is_empty() {
                "-".to_string()
            } else {
                candidates
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let chosen = chosen.map_or("-".to_string(), |c| c.to_string());
            let _ = writeln!(out, "ev {t} sel {node} {chosen} {cands}");
        }
        EventKind::BlockForConn { src, dst } => {
            let _ = writeln!(out, "ev {t} call {src} {dst}");
        }
        EventKind::ProposalDeliver { src, dst } => {
            let _ = writeln!(out, "ev {t} prop {src} {dst}");
        }
        EventKind::ProposalResponse { src, dst, accepted } => {
            let _ = writeln!(out, "ev {t} resp {src} {dst} {}", u8::from(*accepted));
        }
        EventKind::TransferDone { src, dst, moved } => match moved {
            Some(m) => {
                let _ = writeln!(out, "ev {t} done {src} {dst} {} {} {}", m.from, m.to, m.token);
            }
            None => {
                let _ = writeln!(out, "ev {t} done {src} {dst} - - -");
            }
        },
    }
}

pub fn async_to_text(trace: &AsyncTrace) -> String {
    let mut out = String::new();
    write_header(&mut out, "async", &trace.graph, &trace.initial, trace.seed);
    let b = &trace.bounds;
    let _ = writeln!(
        out,
        "bounds {} {} {} {}",
        b.delta_update, b.delta_conn, b.rate_bits, b.token_bits
    );
    for ev in &trace.events {
        write_event(&mut out, ev);
    }
    match trace.completion {
        Some(t) => {
            let _ = writeln!(out, "complete {t}");
        }
        None => {
            let _ = writeln!(out, "complete none");
        }
    }
    let _ = writeln!(out, "end {}", trace.end_time);
    out
}

fn parse_tag(fp: &str, size: &str, uid: NodeId, i: usize) -> Result<Tag, TraceError> {
    let fingerprint = u64::from_str_radix(fp, 16)
        .map_err(|_| TraceError::Parse { line: i + 1, msg: format!("bad fingerprint `{fp}`") })?;
    Ok(Tag { fingerprint, size: parse(size, i)?, uid })
}

pub fn async_from_text(text: &str) -> Result<AsyncTrace, TraceError> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let header = parse_header(&lines, "async")?;
    let n = header.graph.node_count();
    let mut i = header.next;

    let parts = tagged(&lines, i, "bounds", 4)?;
    let bounds = DelayBounds {
        delta_update: parse(parts[0], i)?,
        delta_conn: parse(parts[1], i)?,
        rate_bits: parse(parts[2], i)?,
        token_bits: parse(parts[3], i)?,
    };
    i += 1;

    let mut events = Vec::new();
    while i < lines.len() && lines[i].starts_with("ev ") {
        let toks: Vec<&str> = lines[i].split_whitespace().collect();
        if toks.len() < 4 {
            return err(i, "truncated event line");
        }
        let time: u64 = parse(toks[1], i)?;
        let kind = match (toks[2], &toks[3..]) {
            ("upd", [nd, fp, size]) => {
                let node = node(nd, i, n)?;
                EventKind::Update { node, tag: parse_tag(fp, size, node, i)? }
            }
            ("ad", [src, dst, fp, size]) => {
                let src = node(src, i, n)?;
                EventKind::AdDeliver {
                    src,
                    dst: node(dst, i, n)?,
                    tag: parse_tag(fp, size, src, i)?,
                }
            }
            ("wake", [nd]) => EventKind::LoopWake { node: node(nd, i, n)? },
            ("sel", [nd, chosen, cands]) => {
                let chosen = match *chosen {
                    "-" => None,
                    c => Some(node(c, i, n)?),
                };
                let candidates = match *cands {
                    "-" => Vec::new(),
                    list => list
                        .split(',')
                        .map(|c| node(c, i, n))
                        .collect::<Result<_, _>>()?,
                };
                EventKind::Select { node: node(nd, i, n)?, candidates, chosen }
            }
            ("call", [src, dst]) => EventKind::BlockForConn {
                src: node(src, i, n)?,
                dst: node(dst, i, n)?,
            },
            ("prop", [src, dst]) => EventKind::ProposalDeliver {
                src: node(src, i, n)?,
                dst: node(dst, i, n)?,
            },
            ("resp", [src, dst, acc]) => EventKind::ProposalResponse {
                src: node(src, i, n)?,
                dst: node(dst, i, n)?,
                accepted: match *acc {
                    "1" => true,
                    "0" => false,
                    other => return err(i, format!("bad accept flag `{other}`")),
                },
            },
            ("done", [src, dst, "-", "-", "-"]) => EventKind::TransferDone {
                src: node(src, i, n)?,
                dst: node(dst, i, n)?,
                moved: None,
            },
            ("done", [src, dst, from, to, token]) => EventKind::TransferDone {
                src: node(src, i, n)?,
                dst: node(dst, i, n)?,
                moved: Some(Transfer {
                    from: node(from, i, n)?,
                    to: node(to, i, n)?,
                    token: TokenId(parse(token, i)?),
                }),
            },
            (other, _) => return err(i, format!("unknown or malformed event `{other}`")),
        };
        events.push(TraceEvent { time, kind });
        i += 1;
    }

    let completion = match tagged(&lines, i, "complete", 1)?[0] {
        "none" => None,
        t => Some(parse(t, i)?),
    };
    i += 1;
    let end_time: u64 = field(&lines, i, "end")?;
    i += 1;
    if i != lines.len() {
        return err(i, "trailing content after `end`");
    }

    Ok(AsyncTrace {
        graph: header.graph,
        bounds,
        initial: header.initial,
        events,
        completion,
        end_time,
        seed: header.seed,
    })
}

/// Peeks at the header to tell the two trace kinds apart.
pub fn trace_kind(text: &str) -> Option<&'static str> {
    let first = text.lines().next()?;
    match first {
        "mtm-trace sync 1" => Some("sync"),
        "mtm-trace async 1" => Some("async"),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Token seeding files: one `node token` pair per line.
// ---------------------------------------------------------------------------

pub fn seeding_from_text(text: &str, n: usize) -> Result<Vec<BTreeSet<TokenId>>, TraceError> {
    let mut out = vec![BTreeSet::new(); n];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(node), Some(token), None) = (parts.next(), parts.next(), parts.next()) else {
            return err(i, "expected `node token`");
        };
        let node: usize = parse(node, i)?;
        if node >= n {
            return err(i, format!("node {node} out of range for n={n}"));
        }
        out[node].insert(TokenId(parse(token, i)?));
    }
    Ok(out)
}

pub fn seeding_to_text(initial: &[BTreeSet<TokenId>]) -> String {
    let mut out = String::new();
    for (node, tokens) in initial.iter().enumerate() {
        for t in tokens {
            let _ = writeln!(out, "{node} {t}");
        }
    }
    out
}
