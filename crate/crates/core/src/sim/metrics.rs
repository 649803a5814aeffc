use std::io::Write;

use serde::{Deserialize, Serialize};

/// Fixed CSV header, in column order.
pub const CSV_HEADER: [&str; 9] = [
    "time_s",
    "total_energy_j",
    "active_nodes",
    "reports_sent",
    "reports_delivered",
    "delivery_ratio",
    "ch_count",
    "gw_count",
    "dgw_count",
];

/// One sampled row. Counters are cumulative since t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub time_s: f64,
    pub total_energy_j: f64,
    pub active_nodes: usize,
    pub reports_sent: u64,
    pub reports_delivered: u64,
    pub delivery_ratio: f64,
    pub ch_count: usize,
    pub gw_count: usize,
    pub dgw_count: usize,
}

impl MetricsRow {
    fn fields(&self) -> [String; 9] {
        [
            self.time_s.to_string(),
            self.total_energy_j.to_string(),
            self.active_nodes.to_string(),
            self.reports_sent.to_string(),
            self.reports_delivered.to_string(),
            self.delivery_ratio.to_string(),
            self.ch_count.to_string(),
            self.gw_count.to_string(),
            self.dgw_count.to_string(),
        ]
    }
}

/// Cumulative delivered/sent, zero before anything was sent.
pub fn delivery_ratio(sent: u64, delivered: u64) -> f64 {
    if sent == 0 {
        0.0
    } else {
        delivered as f64 / sent as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub rows: Vec<MetricsRow>,
}

impl MetricsSeries {
    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Writes the series as CSV with LF line endings. Floats use Rust's
    /// shortest round-trip decimal form.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record(r.fields())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    /// Checks the series invariants; returns a description of the first breach.
    pub fn check_invariants(&self) -> Result<(), String> {
        for w in self.rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.time_s <= a.time_s {
                return Err(format!("time not increasing at {}", b.time_s));
            }
            if b.total_energy_j < a.total_energy_j {
                return Err(format!("energy decreased at {}", b.time_s));
            }
            if b.active_nodes > a.active_nodes {
                return Err(format!("active nodes increased at {}", b.time_s));
            }
            if b.reports_sent < a.reports_sent || b.reports_delivered < a.reports_delivered {
                return Err(format!("counter decreased at {}", b.time_s));
            }
        }
        Ok(())
    }
}

/// Whether each sampling window met the report requirement: reports
/// delivered in the window per second of window length, compared with `n_req`
/// inclusively. One entry per consecutive row pair.
pub fn report_quality_check(series: &MetricsSeries, n_req: f64) -> Vec<bool> {
    series
        .rows
        .windows(2)
        .map(|w| {
            let dt = w[1].time_s - w[0].time_s;
            let delivered = (w[1].reports_delivered - w[0].reports_delivered) as f64;
            delivered / dt >= n_req
        })
        .collect()
}
