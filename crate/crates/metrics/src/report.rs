use serde::{Deserialize, Serialize};

/// Per-image metric values for one reconstruction role.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub id: String,
    /// Reconstruction role, e.g. `x_RIS`, `x_ING`, `x_IS`, `x_LPP`.
    pub role: String,
    pub re: f64,
    pub rmse: f64,
    pub ssim: f64,
}

/// Mean and (population) standard deviation of one metric over one role.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Aggregate {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Aggregate {
            mean,
            std: var.sqrt(),
        }
    }
}

/// Collection of per-image records with aggregates derived on demand, so the
/// two can never drift apart.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub records: Vec<MetricRecord>,
}

pub const METRIC_NAMES: [&str; 3] = ["RE", "RMSE", "SSIM"];

impl MetricsReport {
    pub fn new(records: Vec<MetricRecord>) -> Self {
        MetricsReport { records }
    }

    pub fn roles(&self) -> Vec<String> {
        let mut roles: Vec<String> = Vec::new();
        for r in &self.records {
            if !roles.contains(&r.role) {
                roles.push(r.role.clone());
            }
        }
        roles
    }

    fn values(&self, role: &str, metric: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.role == role)
            .map(|r| match metric {
                "RE" => r.re,
                "RMSE" => r.rmse,
                "SSIM" => r.ssim,
                other => panic!("unknown metric {other}"),
            })
            .collect()
    }

    /// Aggregate for `(role, metric)`; `None` when the role is absent.
    pub fn aggregate(&self, role: &str, metric: &str) -> Option<Aggregate> {
        let values = self.values(role, metric);
        if values.is_empty() {
            None
        } else {
            Some(Aggregate::of(&values))
        }
    }

    /// Per-image CSV: `id,role,re,rmse,ssim`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,role,re,rmse,ssim\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{:.8},{:.8},{:.8}\n",
                r.id, r.role, r.re, r.rmse, r.ssim
            ));
        }
        out
    }
}

/// Formatted text table: one row per (metric, role), one column per labeled
/// report, cells `mean ± std`.
pub fn format_comparison_table(columns: &[(String, &MetricsReport)]) -> String {
    let mut roles: Vec<String> = Vec::new();
    for (_, report) in columns {
        for role in report.roles() {
            if !roles.contains(&role) {
                roles.push(role);
            }
        }
    }
    let label_width = 14;
    let cell_width = 20;
    let mut out = String::new();
    out.push_str(&format!("{:<6} {:<label_width$}", "", "",));
    for (name, _) in columns {
        out.push_str(&format!(" | {name:^cell_width$}"));
    }
    out.push('\n');
    let rule_len = 6 + 1 + label_width + columns.len() * (3 + cell_width);
    out.push_str(&"-".repeat(rule_len));
    out.push('\n');
    for metric in METRIC_NAMES {
        for role in &roles {
            out.push_str(&format!("{metric:<6} {role:<label_width$}"));
            for (_, report) in columns {
                match report.aggregate(role, metric) {
                    Some(a) => out.push_str(&format!(
                        " | {:^cell_width$}",
                        format!("{:.4} ± {:.4}", a.mean, a.std)
                    )),
                    None => out.push_str(&format!(" | {:^cell_width$}", "-")),
                }
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn record(id: &str, role: &str, v: f64) -> MetricRecord {
        MetricRecord {
            id: id.into(),
            role: role.into(),
            re: v,
            rmse: 2.0 * v,
            ssim: 1.0 - v,
        }
    }

    #[test]
    fn aggregates_match_manual_recomputation() {
        let report = MetricsReport::new(vec![
            record("a", "x_RIS", 0.1),
            record("b", "x_RIS", 0.3),
            record("c", "x_RIS", 0.2),
            record("a", "x_ING", 0.05),
        ]);
        let agg = report.aggregate("x_RIS", "RE").unwrap();
        let mean = (0.1 + 0.3 + 0.2) / 3.0;
        let var = ((0.1f64 - mean).powi(2) + (0.3 - mean).powi(2) + (0.2 - mean).powi(2)) / 3.0;
        assert_relative_eq!(agg.mean, mean, max_relative = 1e-14);
        assert_relative_eq!(agg.std, var.sqrt(), max_relative = 1e-14);
        assert!(report.aggregate("x_LPP", "RE").is_none());
    }

    #[test]
    fn csv_has_one_line_per_record() {
        let report = MetricsReport::new(vec![record("a", "x_RIS", 0.1), record("b", "x_ING", 0.2)]);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("id,role,re,rmse,ssim"));
    }

    #[test]
    fn table_lists_metrics_by_role_columns_by_config() {
        let a = MetricsReport::new(vec![record("a", "x_RIS", 0.1), record("a", "x_ING", 0.02)]);
        let b = MetricsReport::new(vec![record("a", "x_RIS", 0.12)]);
        let table = format_comparison_table(&[("K=3".into(), &a), ("K=10".into(), &b)]);
        assert!(table.contains("K=3"));
        assert!(table.contains("K=10"));
        // 2 roles × 3 metrics rows plus header and rule.
        assert_eq!(table.lines().count(), 2 + 6);
    }
}
