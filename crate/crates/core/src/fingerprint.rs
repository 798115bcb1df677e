//! Fixed 128-bit non-cryptographic fingerprints (XXH3-128).

use xxhash_rust::xxh3::Xxh3;

use crate::trace::TraceEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fingerprint(pub u128);

impl core::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

/// Streaming fingerprint builder. Every item is length-framed, so `["ab","c"]`
/// and `["a","bc"]` hash differently.
#[derive(Clone)]
pub struct Fingerprinter {
    state: Xxh3,
    items: u64,
}

impl Default for Fingerprinter {
    fn default() -> Self {
        Self::new()
    }
}

impl Fingerprinter {
    pub fn new() -> Self {
        Self { state: Xxh3::new(), items: 0 }
    }

    pub fn push_u64(&mut self, v: u64) {
        self.state.update(&v.to_le_bytes());
        self.items += 1;
    }

    pub fn push_bytes(&mut self, bytes: &[u8]) {
        self.state.update(&(bytes.len() as u64).to_le_bytes());
        self.state.update(bytes);
        self.items += 1;
    }

    pub fn push_event(&mut self, ev: &TraceEvent) {
        self.state.update(&[ev.kind as u8]);
        self.state.update(&ev.ip.to_le_bytes());
        self.state.update(&ev.payload.to_le_bytes());
        self.state.update(&ev.aux.to_le_bytes());
        self.items += 1;
    }

    pub fn finish(&self) -> Fingerprint {
        let mut s = self.state.clone();
        s.update(&self.items.to_le_bytes());
        Fingerprint(s.digest128())
    }
}

pub fn of_payloads(payloads: &[u64]) -> Fingerprint {
    let mut f = Fingerprinter::new();
    for &p in payloads {
        f.push_u64(p);
    }
    f.finish()
}

pub fn of_events(events: &[TraceEvent]) -> Fingerprint {
    let mut f = Fingerprinter::new();
    for ev in events {
        f.push_event(ev);
    }
    f.finish()
}

pub fn of_strs<'a>(parts: impl IntoIterator<Item = &'a str>) -> Fingerprint {
    let mut f = Fingerprinter::new();
    for p in parts {
        f.push_bytes(p.as_bytes());
    }
    f.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framing_separates_boundaries() {
        assert_ne!(of_strs(["ab", "c"]), of_strs(["a", "bc"]));
        assert_ne!(of_payloads(&[]), of_payloads(&[0]));
        assert_eq!(of_payloads(&[1, 2]), of_payloads(&[1, 2]));
    }

    #[test]
    fn display_is_32_hex_digits() {
        assert_eq!(alloc::format!("{}", Fingerprint(0xab)).len(), 32);
    }
}
