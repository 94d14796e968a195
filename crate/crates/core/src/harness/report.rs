//! Report types and their CSV form (one header line, reals as `%g` with 6 significant digits).

use std::path::Path;
use std::time::Duration;

use crate::error::{Error, Result};

/// C-style `%g` with 6 significant digits.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes a header and string rows.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.map(|x| x.iter().map(str::to_string).collect())).collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

/// A frequency with its Monte Carlo standard error `√(p(1−p)/R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency {
    pub p: f64,
    pub se: f64,
}

impl Frequency {
    pub fn of(hits: usize, total: usize) -> Self {
        let p = if total == 0 { f64::NAN } else { hits as f64 / total as f64 };
        Self { p, se: (p * (1.0 - p) / total as f64).sqrt() }
    }
}

/// One Monte Carlo replication of a credible-band coverage experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub rep: usize,
    /// `Θ(φ̂)^{−q/√n} ⊆ Θ(φ₀)`; an empty inner set counts as covered.
    pub covered_lower: bool,
    /// `Θ(φ₀) ⊆ Θ(φ̂)^{q/√n}`.
    pub covered_upper: bool,
    pub covered_two_sided: bool,
    pub inner_empty: bool,
    pub q: f64,
    pub phi_hat: Vec<f64>,
    /// Kept in memory only, so that CSV output is reproducible byte for byte.
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageSummary {
    pub replications: usize,
    pub lower: Frequency,
    pub upper: Frequency,
    pub two_sided: Frequency,
    pub inner_empty: Frequency,
    pub mean_q: f64,
}

impl CoverageSummary {
    pub fn from_rows(rows: &[CoverageRow]) -> Self {
        let r = rows.len();
        let count = |f: fn(&CoverageRow) -> bool| rows.iter().filter(|x| f(x)).count();
        Self {
            replications: r,
            lower: Frequency::of(count(|x| x.covered_lower), r),
            upper: Frequency::of(count(|x| x.covered_upper), r),
            two_sided: Frequency::of(count(|x| x.covered_two_sided), r),
            inner_empty: Frequency::of(count(|x| x.inner_empty), r),
            mean_q: rows.iter().map(|x| x.q).sum::<f64>() / r.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoverageReport {
    /// Label distinguishing reports written side by side (e.g. a prior or a `Δ`).
    pub label: String,
    pub rows: Vec<CoverageRow>,
    pub summary: CoverageSummary,
}

const SUMMARY_HEADER: [&str; 11] = [
    "label",
    "replications",
    "lower",
    "lower_se",
    "upper",
    "upper_se",
    "two_sided",
    "two_sided_se",
    "inner_empty",
    "inner_empty_se",
    "mean_q",
];

impl CoverageReport {
    pub fn new(label: impl Into<String>, mut rows: Vec<CoverageRow>) -> Self {
        rows.sort_by_key(|r| r.rep);
        let summary = CoverageSummary::from_rows(&rows);
        Self { label: label.into(), rows, summary }
    }

    pub fn rows_header(&self) -> Vec<String> {
        let k = self.rows.first().map_or(0, |r| r.phi_hat.len());
        let mut h: Vec<String> =
            ["label", "rep", "covered_lower", "covered_upper", "covered_two_sided", "inner_empty", "q"].map(String::from).to_vec();
        h.extend((1..=k).map(|i| format!("phi_hat_{i}")));
        h
    }

    pub fn row_records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![
                    self.label.clone(),
                    r.rep.to_string(),
                    flag(r.covered_lower).into(),
                    flag(r.covered_upper).into(),
                    flag(r.covered_two_sided).into(),
                    flag(r.inner_empty).into(),
                    fmt_g(r.q),
                ];
                v.extend(r.phi_hat.iter().map(|&x| fmt_g(x)));
                v
            })
            .collect()
    }

    pub fn summary_record(&self) -> Vec<String> {
        let s = &self.summary;
        vec![
            self.label.clone(),
            s.replications.to_string(),
            fmt_g(s.lower.p),
            fmt_g(s.lower.se),
            fmt_g(s.upper.p),
            fmt_g(s.upper.se),
            fmt_g(s.two_sided.p),
            fmt_g(s.two_sided.se),
            fmt_g(s.inner_empty.p),
            fmt_g(s.inner_empty.se),
            fmt_g(s.mean_q),
        ]
    }

    pub fn summary_header() -> Vec<String> {
        SUMMARY_HEADER.map(String::from).to_vec()
    }

    /// Writes several reports into one rows file and one summary file.
    pub fn write_all(reports: &[CoverageReport], rows_path: &Path, summary_path: &Path) -> Result<()> {
        let header = reports.first().map(CoverageReport::rows_header).unwrap_or_default();
        let rows: Vec<Vec<String>> = reports.iter().flat_map(CoverageReport::row_records).collect();
        write_table(rows_path, &header, &rows)?;
        let sums: Vec<Vec<String>> = reports.iter().map(CoverageReport::summary_record).collect();
        write_table(summary_path, &Self::summary_header(), &sums)
    }

    /// Reads files written by [`Self::write_all`] and checks every summary line against
    /// the means recomputed from its rows.
    pub fn load_all(rows_path: &Path, summary_path: &Path) -> Result<Vec<CoverageReport>> {
        let (header, rows) = read_table(rows_path)?;
        if header.len() < 7 || header[..7] != ["label", "rep", "covered_lower", "covered_upper", "covered_two_sided", "inner_empty", "q"] {
            return Err(Error::State(format!("{}: unexpected coverage header", rows_path.display())));
        }
        let parse_f = |s: &str| s.parse::<f64>().map_err(|_| Error::State(format!("bad number {s:?}")));
        let parse_b = |s: &str| match s {
            "1" => Ok(true),
            "0" => Ok(false),
            _ => Err(Error::State(format!("bad flag {s:?}"))),
        };
        let mut reports: Vec<CoverageReport> = Vec::new();
        for r in rows {
            let row = CoverageRow {
                rep: r[1].parse().map_err(|_| Error::State(format!("bad rep {:?}", r[1])))?,
                covered_lower: parse_b(&r[2])?,
                covered_upper: parse_b(&r[3])?,
                covered_two_sided: parse_b(&r[4])?,
                inner_empty: parse_b(&r[5])?,
                q: parse_f(&r[6])?,
                phi_hat: r[7..].iter().map(|s| parse_f(s)).collect::<Result<_>>()?,
                wall_time: Duration::ZERO,
            };
            match reports.iter_mut().find(|x| x.label == r[0]) {
                Some(rep) => rep.rows.push(row),
                None => reports.push(CoverageReport { label: r[0].clone(), rows: vec![row], summary: CoverageSummary::from_rows(&[]) }),
            }
        }
        for rep in &mut reports {
            rep.summary = CoverageSummary::from_rows(&rep.rows);
        }
        let (sh, sums) = read_table(summary_path)?;
        if sh != SUMMARY_HEADER {
            return Err(Error::State(format!("{}: unexpected summary header", summary_path.display())));
        }
        if sums.len() != reports.len() {
            return Err(Error::State("summary and rows list different labels".into()));
        }
        for s in sums {
            let rep = reports
                .iter()
                .find(|x| x.label == s[0])
                .ok_or_else(|| Error::State(format!("summary label {:?} has no rows", s[0])))?;
            let recomputed = rep.summary_record();
            for (i, (a, b)) in s.iter().zip(&recomputed).enumerate().skip(1) {
                let same = a == b || matches!((a.parse::<f64>(), b.parse::<f64>()), (Ok(x), Ok(y)) if (x - y).abs() <= 1e-5 * x.abs().max(1e-12));
                if !same {
                    return Err(Error::State(format!("label {:?}: {} is {a} but rows give {b}", s[0], SUMMARY_HEADER[i])));
                }
            }
        }
        Ok(reports)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_g_formatting() {
        for (x, s) in [
            (0.0, "0"),
            (1.0, "1"),
            (0.95, "0.95"),
            (1.0 / 3.0, "0.333333"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (999999.5, "1e+06"),
            (f64::INFINITY, "inf"),
        ] {
            assert_eq!(fmt_g(x), s, "{x}");
        }
    }

    #[test]
    fn frequency_se() {
        let f = Frequency::of(95, 100);
        assert!((f.p - 0.95).abs() < 1e-15 && (f.se - (0.95f64 * 0.05 / 100.0).sqrt()).abs() < 1e-15);
    }
}
