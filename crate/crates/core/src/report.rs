//! CSV rows for run records.

use crate::selfplay::RunRecord;

pub const CSV_HEADER: [&str; 12] = [
    "game",
    "algo",
    "seed",
    "eta",
    "gamma",
    "episode",
    "exploit_avg",
    "exploit_last",
    "regret_max",
    "regret_min",
    "theorem1_bound",
    "wall_ms",
];

/// Plain decimal rendering with 10 significant digits, e.g. `0.0001234567891`.
/// Parsing the output and formatting again reproduces it exactly.
pub fn format_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    let rounded: f64 = format!("{v:.9e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

pub fn csv_rows(record: &RunRecord) -> Vec<[String; 12]> {
    let algo = record.algo_label();
    record
        .checkpoints
        .iter()
        .map(|c| {
            [
                record.game.clone(),
                algo.clone(),
                record.seed.to_string(),
                format_sig(record.eta),
                format_sig(record.gamma),
                c.episode.to_string(),
                format_sig(c.exploit_avg),
                format_sig(c.exploit_last),
                format_sig(c.regret_max),
                format_sig(c.regret_min),
                format_sig(c.theorem1_bound),
                format_sig(c.wall_ms),
            ]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(format_sig(0.123456789012345), "0.123456789");
        assert_eq!(format_sig(1234567.891234), "1234567.891");
        assert_eq!(format_sig(1.5e-7), "0.00000015");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(-2.0), "-2");
        assert_eq!(format_sig(f64::NAN), "nan");
    }
}
