use std::fmt::Write as _;

use slam_pipeline::FrameTimings;

/// Reference medians (milliseconds) the report is compared against.
pub const REFERENCE_MS: [(&str, f64); 4] = [
    ("normal_computation", 18.0),
    ("quadric_segmentation", 156.0),
    ("data_association", 5.0),
    ("graph_optimisation", 12.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeRow {
    pub name: &'static str,
    pub reference_ms: f64,
    pub median_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuntimeReport {
    pub frames: usize,
    /// Empty when no frames were timed.
    pub rows: Vec<RuntimeRow>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn runtime_report(timings: &[FrameTimings]) -> RuntimeReport {
    if timings.is_empty() {
        return RuntimeReport::default();
    }
    let series: [Vec<f64>; 4] = [
        timings.iter().map(|t| t.normals).collect(),
        timings.iter().map(|t| t.segmentation).collect(),
        timings.iter().map(|t| t.association).collect(),
        timings.iter().map(|t| t.optimisation).collect(),
    ];
    let rows = REFERENCE_MS
        .iter()
        .zip(series)
        .map(|(&(name, reference_ms), s)| RuntimeRow {
            name,
            reference_ms,
            median_ms: median(s),
        })
        .collect();
    RuntimeReport {
        frames: timings.len(),
        rows,
    }
}

impl RuntimeReport {
    pub fn format_table(&self) -> String {
        let mut s = format!("{:<22}{:>12}{:>12}{:>8}\n", "component", "median ms", "ref ms", "ratio");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<22}{:>12.2}{:>12.1}{:>8.2}",
                r.name,
                r.median_ms,
                r.reference_ms,
                r.median_ms / r.reference_ms
            );
        }
        s
    }

    pub fn format_lines(&self) -> String {
        self.rows
            .iter()
            .map(|r| format!("runtime_{}_ms {}\n", r.name, r.median_ms))
            .collect()
    }
}
