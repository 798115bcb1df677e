//! Brute-force reference for per-site leakage: exact payload sequences,
//! pairwise grouping, entropy as `log2 n - sum(c log2 c) / n`.

use zeroleak_core::mi::Channel;
use zeroleak_core::trace::{EventKind, ExecutionTrace};

fn channel(kind: EventKind) -> Option<Channel> {
    match kind as u8 {
        1 | 2 => Some(Channel::MemoryAccess),
        0 | 5 | 6 => Some(Channel::ControlFlow),
        _ => None,
    }
}

/// `(ip, channel, bits, classes)` for every site whose sequences are not all
/// equal, sorted by ip then channel.
pub fn site_entropies(traces: &[ExecutionTrace]) -> Vec<(u64, Channel, f64, usize)> {
    let n = traces.len();
    let mut sites: Vec<(u64, Channel)> = Vec::new();
    for t in traces {
        for e in &t.events {
            if let Some(c) = channel(e.kind) {
                if !sites.contains(&(e.ip, c)) {
                    sites.push((e.ip, c));
                }
            }
        }
    }
    sites.sort();
    let mut out = Vec::new();
    for (ip, ch) in sites {
        let seqs: Vec<Vec<u64>> = traces
            .iter()
            .map(|t| t.events.iter().filter(|e| e.ip == ip && channel(e.kind) == Some(ch)).map(|e| e.payload).collect())
            .collect();
        // class representative index for each trace
        let mut counts: Vec<usize> = Vec::new();
        let mut reps: Vec<usize> = Vec::new();
        for i in 0..n {
            match reps.iter().position(|&r| seqs[r] == seqs[i]) {
                Some(k) => counts[k] += 1,
                None => {
                    reps.push(i);
                    counts.push(1);
                }
            }
        }
        if counts.len() > 1 {
            let nf = n as f64;
            let s: f64 = counts.iter().map(|&c| c as f64 * (c as f64).log2()).sum();
            out.push((ip, ch, nf.log2() - s / nf, counts.len()));
        }
    }
    out
}
