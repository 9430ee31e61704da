//! Metrics report output: JSON plus an aligned plain-text table.

use graspdiff_core::metrics::MetricsReport;

fn fmt_opt(v: Option<f64>, unit: &str) -> String {
    match v {
        Some(x) => format!("{x:.4} {unit}"),
        None => "n/a".to_string(),
    }
}

pub fn text_table(r: &MetricsReport) -> String {
    let rows = [
        ("IV".to_string(), format!("{:.4} cm^3", r.iv_cm3)),
        ("ID".to_string(), format!("{:.4} mm", r.id_mm)),
        ("CR".to_string(), format!("{:.4}", r.cr)),
        ("SD".to_string(), fmt_opt(r.sd_m, "m")),
        ("OD".to_string(), fmt_opt(r.od_m, "m")),
        ("GE".to_string(), fmt_opt(r.ge_m, "m")),
        ("HA".to_string(), fmt_opt(r.ha, "")),
        ("T_vel".to_string(), fmt_opt(r.t_vel, "m/s")),
        ("DIV".to_string(), format!("{:.4} +/- {:.4}", r.div, r.div_std)),
        ("MM".to_string(), format!("{:.4} +/- {:.4}", r.mm, r.mm_std)),
        (
            "ActionCorrectness".to_string(),
            fmt_opt(r.action_correctness, ""),
        ),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        out.push_str(&format!("{k:<width$}  {v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_lists_every_metric() {
        let r = MetricsReport {
            iv_cm3: 1.0,
            id_mm: 2.0,
            cr: 0.5,
            sd_m: Some(0.1),
            od_m: Some(0.2),
            ge_m: None,
            ha: None,
            t_vel: Some(0.3),
            div: 1.1,
            div_std: 0.01,
            mm: 0.9,
            mm_std: 0.02,
            action_correctness: Some(0.8),
        };
        let t = text_table(&r);
        for key in ["IV", "ID", "CR", "SD", "OD", "GE", "HA", "T_vel", "DIV", "MM"] {
            assert!(t.contains(key), "missing {key}");
        }
        assert!(t.contains("n/a"));
    }
}
