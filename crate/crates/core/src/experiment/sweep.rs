use std::collections::BTreeMap;

use serde::Serialize;

use super::config::{Estimator, ScenarioConfig, TopologyConfig};
use super::sim::run_scenario;
use crate::error::{Error, Result};

/// Averages over every step and agent of one run at link-failure probability `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub estimator: Estimator,
    pub mean_affinity: f64,
    pub mean_det_ratio: f64,
    pub mean_rmse: f64,
}

/// Parses `start:end:step` (inclusive) into probabilities rounded to 12 decimals.
pub fn parse_p_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("p range: '{s}' is not a number")))
    };
    let values = match parts.as_slice() {
        [single] => vec![parse(single)?],
        [start, end, step] => {
            let (start, end, step) = (parse(start)?, parse(end)?, parse(step)?);
            if !(step > 0.0) || end < start {
                return Err(Error::Config(format!("p range: invalid range '{spec}'")));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect()
        }
        _ => {
            return Err(Error::Config(format!(
                "p range: expected start:end:step, got '{spec}'"
            )))
        }
    };
    if let Some(bad) = values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Config(format!("p range: {bad} outside [0, 1]")));
    }
    Ok(values)
}

/// One run per link-failure probability on the configured regular graph.
pub fn run_failure_sweep(cfg: &ScenarioConfig, p_values: &[f64]) -> Result<Vec<SweepRow>> {
    let TopologyConfig::RegularWithFailures { degree, .. } = cfg.topology else {
        return Err(Error::Config(
            "topology: a failure sweep needs mode = \"regular_with_failures\"".into(),
        ));
    };
    let mut rows = Vec::new();
    for &p in p_values {
        let mut cell = cfg.clone();
        cell.topology = TopologyConfig::RegularWithFailures { degree, p_fail: p };
        let records = run_scenario(&cell)?;
        let mut acc: BTreeMap<Estimator, (f64, f64, f64, usize)> = BTreeMap::new();
        for r in &records {
            let e = acc.entry(r.estimator).or_default();
            e.0 += r.metrics.bhattacharyya_affinity;
            e.1 += r.metrics.det_ratio;
            e.2 += r.metrics.rmse;
            e.3 += 1;
        }
        for &estimator in &cfg.estimators {
            let Some(&(a, d, e, count)) = acc.get(&estimator) else {
                continue;
            };
            let count = count as f64;
            rows.push(SweepRow {
                p,
                estimator,
                mean_affinity: a / count,
                mean_det_ratio: d / count,
                mean_rmse: e / count,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_ranges() {
        let v = parse_p_range("0:0.9:0.1").unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(v[3], 0.3);
        assert_eq!(v[9], 0.9);
        assert_eq!(parse_p_range("0.25").unwrap(), vec![0.25]);
        assert!(parse_p_range("0:2:0.5").is_err());
        assert!(parse_p_range("0:1").is_err());
        assert!(parse_p_range("a:1:0.1").is_err());
    }
}
