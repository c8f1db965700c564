use serde::{Deserialize, Serialize};

/// Work counters incremented at every probe and sample site.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meter {
    /// Adjacency membership tests and list-entry inspections.
    pub probes: u64,
    /// Random draws (colors, neighbors, vertices).
    pub samples: u64,
    /// Vertices whose state was rewritten.
    pub touched: u64,
}

impl Meter {
    #[inline]
    pub fn total(&self) -> u64 {
        self.probes + self.samples + self.touched
    }

    pub fn since(&self, earlier: &Meter) -> Meter {
        Meter {
            probes: self.probes - earlier.probes,
            samples: self.samples - earlier.samples,
            touched: self.touched - earlier.touched,
        }
    }
}
