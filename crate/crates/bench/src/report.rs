use std::io::Write;

use serde::Serialize;

/// Column order of the CSV report.
pub const CSV_HEADER: [&str; 11] = [
    "name",
    "m",
    "workers",
    "scheduler",
    "winograd_median_us",
    "baseline_median_us",
    "speedup",
    "max_rel_error",
    "winograd_aux_bytes",
    "baseline_aux_bytes",
    "paper_reference_speedup",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryReport {
    pub name: String,
    pub m: usize,
    pub workers: usize,
    pub scheduler: String,
    pub winograd_median_us: f64,
    pub winograd_min_us: f64,
    pub baseline_median_us: f64,
    pub baseline_min_us: f64,
    /// `baseline_median_us / winograd_median_us`
    pub speedup: f64,
    /// Present when verification ran.
    pub max_rel_error: Option<f64>,
    pub tolerance: Option<f64>,
    pub winograd_aux_bytes: usize,
    pub baseline_aux_bytes: usize,
    pub paper_reference_speedup: Option<f64>,
    /// One-off cost of building the transformed filter bank; not part of the timed runs.
    pub bank_build_us: f64,
    pub tile_block: usize,
    pub oc_block: usize,
    pub fits_l1: bool,
    pub winograd_samples_us: Vec<f64>,
    pub baseline_samples_us: Vec<f64>,
}

impl EntryReport {
    pub fn passed(&self) -> bool {
        match (self.max_rel_error, self.tolerance) {
            (Some(e), Some(t)) => e <= t,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BenchReport {
    pub entries: Vec<EntryReport>,
}

impl BenchReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(EntryReport::passed)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for e in &self.entries {
            let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                e.name.clone(),
                e.m.to_string(),
                e.workers.to_string(),
                e.scheduler.clone(),
                e.winograd_median_us.to_string(),
                e.baseline_median_us.to_string(),
                e.speedup.to_string(),
                opt(e.max_rel_error),
                e.winograd_aux_bytes.to_string(),
                e.baseline_aux_bytes.to_string(),
                opt(e.paper_reference_speedup),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)
    }
}

/// Median of `samples`; the mean of the two middle values for even counts.
pub fn median(samples: &[f64]) -> f64 {
    assert!(!samples.is_empty(), "median of no samples");
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let mid = s.len() / 2;
    if s.len() % 2 == 1 {
        s[mid]
    } else {
        (s[mid - 1] + s[mid]) / 2.0
    }
}

/// Result of checking one `(entry, m)` against the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub name: String,
    pub m: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl VerifyRow {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(VerifyRow::passed)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "m", "max_rel_error", "tolerance", "status"])?;
        for r in &self.rows {
            w.write_record([
                r.name.clone(),
                r.m.to_string(),
                r.max_rel_error.to_string(),
                r.tolerance.to_string(),
                if r.passed() { "pass" } else { "fail" }.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)
    }
}
