use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ResourceSample {
    /// Seconds since sampling started.
    pub t: f64,
    /// Sum of per-worker CPU utilisation, in cores.
    pub cpu_cores_busy: f64,
    /// Total resident memory, GB.
    pub rss_gb: f64,
}

/// Componentwise maximum over `samples`; `None` when empty.
pub fn peak_sample(samples: &[ResourceSample]) -> Option<ResourceSample> {
    samples.iter().copied().reduce(|a, b| ResourceSample {
        t: a.t.max(b.t),
        cpu_cores_busy: a.cpu_cores_busy.max(b.cpu_cores_busy),
        rss_gb: a.rss_gb.max(b.rss_gb),
    })
}
