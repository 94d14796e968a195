//! Truncated stick-breaking draws from the Dirichlet-process posterior of moment
//! functionals of the data distribution.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::linalg::Matrix;
use crate::models::ModelTag;
use crate::samplekit::{draw_beta, draw_dirichlet_flat, draw_std_normal, RngStream};

/// i.i.d. observations, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
    names: Vec<String>,
}

impl DataMatrix {
    pub fn from_vec(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        let names = (0..p).map(|j| format!("x{}", j + 1)).collect();
        Self::with_names(n, p, data, names)
    }

    pub fn with_names(n: usize, p: usize, data: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if n == 0 || p == 0 {
            return param("data matrix must have at least one row and one column");
        }
        if data.len() != n * p || names.len() != p {
            return param(format!("data length {} does not match {n}x{p}", data.len()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return param(format!("non-finite entry at row {}, column {}", i / p + 1, i % p + 1));
        }
        Ok(Self { n, p, data, names })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return param("ragged data rows");
        }
        Self::from_vec(rows.len(), p, rows.concat())
    }

    /// Reads a CSV with a header row of column names and one observation per line.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let p = names.len();
        let mut data = Vec::new();
        let mut n = 0;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != p {
                return param(format!("row {} has {} fields, expected {p}", line + 1, rec.len()));
            }
            for field in rec.iter() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::Parameter(format!("row {}: cannot parse {field:?} as a real", line + 1)))?;
                data.push(v);
            }
            n += 1;
        }
        Self::with_names(n, p, data, names)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.names)?;
        for i in 0..self.n {
            wtr.write_record(self.row(i).iter().map(|v| format!("{v:e}")))?;
        }
        wtr.flush()?;
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p)
    }

    pub fn column_means(&self) -> Vec<f64> {
        self.weighted_means(None)
    }

    /// `Σ wᵢ rowᵢ`, or the plain mean when `weights` is `None`.
    pub fn weighted_means(&self, weights: Option<&[f64]>) -> Vec<f64> {
        let mut acc = vec![0.0; self.p];
        match weights {
            Some(w) => {
                for (row, &wi) in self.rows().zip(w) {
                    acc.iter_mut().zip(row).for_each(|(a, &x)| *a += wi * x);
                }
            }
            None => {
                for row in self.rows() {
                    acc.iter_mut().zip(row).for_each(|(a, &x)| *a += x);
                }
                let inv = 1.0 / self.n as f64;
                acc.iter_mut().for_each(|a| *a *= inv);
            }
        }
        acc
    }

    /// The first `k` observations.
    pub fn head(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n {
            return param(format!("cannot take {k} rows of {}", self.n));
        }
        Self::with_names(k, self.p, self.data[..k * self.p].to_vec(), self.names.clone())
    }

    /// Rows selected by index (with repetition), as used by the bootstrap.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            if i >= self.n {
                return param(format!("row index {i} out of range"));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::with_names(idx.len(), self.p, data, self.names.clone())
    }
}

pub type BaseSampler = Arc<dyn Fn(&mut RngStream, &mut [f64]) + Send + Sync>;

/// Base measure Q₀ of the Dirichlet process.
#[derive(Clone)]
pub enum BaseMeasure {
    StandardNormal,
    PointMass(Vec<f64>),
    Custom(BaseSampler),
}

impl fmt::Debug for BaseMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::StandardNormal => f.write_str("StandardNormal"),
            Self::PointMass(c) => f.debug_tuple("PointMass").field(c).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl BaseMeasure {
    fn fill(&self, stream: &mut RngStream, out: &mut [f64]) -> Result<()> {
        match self {
            Self::StandardNormal => out.iter_mut().for_each(|v| *v = draw_std_normal(stream)),
            Self::PointMass(c) => {
                if c.len() != out.len() {
                    return param(format!("point-mass base has dimension {}, data has {}", c.len(), out.len()));
                }
                out.copy_from_slice(c);
            }
            Self::Custom(f) => f(stream, out),
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DpConfig {
    /// Concentration parameter ν₀.
    pub nu0: f64,
    pub truncation: usize,
    pub base: BaseMeasure,
}

impl DpConfig {
    pub fn new(nu0: f64, truncation: usize) -> Self {
        Self { nu0, truncation, base: BaseMeasure::StandardNormal }
    }

    pub fn with_base(mut self, base: BaseMeasure) -> Self {
        self.base = base;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.truncation == 0 {
            return param("truncation K must be at least 1");
        }
        if !(self.nu0 > 0.0) || !self.nu0.is_finite() {
            return param(format!("concentration must be positive, got {}", self.nu0));
        }
        Ok(())
    }
}

/// Order of the truncation error `n·exp(−(K−1)/ν₀)` for K atoms.
pub fn truncation_error_bound(n: usize, nu0: f64, truncation: usize) -> f64 {
    n as f64 * (-((truncation as f64) - 1.0) / nu0).exp()
}

/// Normalised stick-breaking weights `α_k ∝ v_k ∏_{l<k} (1 − v_l)`, `v_k ~ Beta(1, ν₀)`.
pub fn stick_weights(stream: &mut RngStream, nu0: f64, truncation: usize) -> Result<Vec<f64>> {
    if truncation == 0 {
        return param("truncation K must be at least 1");
    }
    let mut remaining = 1.0;
    let mut w = Vec::with_capacity(truncation);
    for _ in 0..truncation {
        let v = draw_beta(stream, 1.0, nu0)?;
        w.push(v * remaining);
        remaining *= 1.0 - v;
    }
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        w.iter_mut().for_each(|x| *x /= s);
    } else {
        // Every stick underflowed; put the mass on the first atom.
        w[0] = 1.0;
    }
    Ok(w)
}

/// One realisation of the posterior random measure: data weights `ρβᵢ` and atom weights `(1−ρ)αⱼ`.
#[derive(Debug, Clone)]
pub struct DpMixture {
    pub rho: f64,
    pub data_weights: Vec<f64>,
    pub atom_weights: Vec<f64>,
    /// K × p atoms ξⱼ ~ Q₀, row-major.
    pub atoms: Vec<f64>,
}

impl DpMixture {
    pub fn draw(stream: &mut RngStream, data: &DataMatrix, cfg: &DpConfig) -> Result<Self> {
        cfg.validate()?;
        let rho = draw_beta(stream, data.n() as f64, cfg.nu0)?;
        let beta = draw_dirichlet_flat(stream, data.n())?;
        let alpha = stick_weights(stream, cfg.nu0, cfg.truncation)?;
        let mut atoms = vec![0.0; cfg.truncation * data.p()];
        for chunk in atoms.chunks_exact_mut(data.p()) {
            cfg.base.fill(stream, chunk)?;
        }
        Ok(Self {
            rho,
            data_weights: beta.into_iter().map(|b| rho * b).collect(),
            atom_weights: alpha.into_iter().map(|a| (1.0 - rho) * a).collect(),
            atoms,
        })
    }

    fn atom_rows(&self, p: usize) -> impl Iterator<Item = (&f64, &[f64])> {
        self.atom_weights.iter().zip(self.atoms.chunks_exact(p))
    }

    pub fn mean(&self, data: &DataMatrix) -> Vec<f64> {
        let mut m = data.weighted_means(Some(&self.data_weights));
        for (&w, xi) in self.atom_rows(data.p()) {
            m.iter_mut().zip(xi).for_each(|(a, &x)| *a += w * x);
        }
        m
    }

    /// Mixture mean and covariance (second moment minus outer product of the mean).
    pub fn mean_and_covariance(&self, data: &DataMatrix) -> (Vec<f64>, Matrix<f64>) {
        let p = data.p();
        let m = self.mean(data);
        let mut s = Matrix::zeros(p, p);
        let mut accumulate = |w: f64, x: &[f64]| {
            for i in 0..p {
                let wi = w * (x[i] - m[i]);
                let row = s.row_mut(i);
                for j in 0..=i {
                    row[j] += wi * (x[j] - m[j]);
                }
            }
        };
        for (row, &w) in data.rows().zip(&self.data_weights) {
            accumulate(w, row);
        }
        for (&w, xi) in self.atom_rows(p) {
            accumulate(w, xi);
        }
        for i in 0..p {
            for j in 0..i {
                s[(j, i)] = s[(i, j)];
            }
        }
        (m, s)
    }
}

/// One draw of the mean functional `ρ Σ βᵢ Dᵢ + (1−ρ) Σ αⱼ ξⱼ`.
pub fn draw_dp_functional(stream: &mut RngStream, data: &DataMatrix, cfg: &DpConfig) -> Result<Vec<f64>> {
    Ok(DpMixture::draw(stream, data, cfg)?.mean(data))
}

/// One joint draw of the mean vector and covariance matrix under a shared mixture.
pub fn draw_dp_second_moment(
    stream: &mut RngStream,
    data: &DataMatrix,
    cfg: &DpConfig,
) -> Result<(Vec<f64>, Matrix<f64>)> {
    Ok(DpMixture::draw(stream, data, cfg)?.mean_and_covariance(data))
}

/// Posterior draws of φ for one model.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub tag: ModelTag,
    pub seed: u64,
    pub stream_id: u64,
    pub draws: Vec<Vec<f64>>,
    /// Total number of rejected attempts (transform failures) across all draws.
    pub rejections: usize,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.draws.first().map_or(0, Vec::len)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for d in &self.draws {
            m.iter_mut().zip(d).for_each(|(a, &x)| *a += x);
        }
        let inv = 1.0 / self.draws.len().max(1) as f64;
        m.iter_mut().for_each(|a| *a *= inv);
        m
    }

    pub fn covariance(&self) -> Matrix<f64> {
        let d = self.dim();
        let m = self.mean();
        let mut c = Matrix::zeros(d, d);
        for x in &self.draws {
            for i in 0..d {
                for j in 0..d {
                    c[(i, j)] += (x[i] - m[i]) * (x[j] - m[j]);
                }
            }
        }
        c.scale(1.0 / (self.draws.len().max(2) - 1) as f64);
        c
    }
}

/// Attempts allowed per draw before a transform failure aborts the run.
pub const MAX_REDRAWS: usize = 100;

/// Runs `attempt` on substream `b` for each draw, redrawing on failure.
///
/// Draws run in parallel; output order is by draw index.
pub fn sample_with_rejection<F>(stream: &RngStream, draws: usize, tag: ModelTag, attempt: F) -> Result<PosteriorDraws>
where
    F: Fn(&mut RngStream) -> Result<Vec<f64>> + Sync,
{
    if draws == 0 {
        return param("need at least one posterior draw");
    }
    let results: Vec<Result<(Vec<f64>, usize)>> = (0..draws as u64)
        .into_par_iter()
        .map(|b| {
            let mut s = stream.substream(b);
            let mut last = None;
            for rejected in 0..=MAX_REDRAWS {
                match attempt(&mut s) {
                    Ok(phi) => return Ok((phi, rejected)),
                    Err(e @ (Error::Parameter(_) | Error::Config(_))) => return Err(e),
                    Err(e) => last = Some(e),
                }
            }
            Err(Error::Numeric(format!(
                "draw {b}: transform failed {} times in a row (last: {})",
                MAX_REDRAWS + 1,
                last.map_or_else(String::new, |e| e.to_string())
            )))
        })
        .collect();
    let mut out = Vec::with_capacity(draws);
    let mut rejections = 0;
    for r in results {
        let (phi, rej) = r?;
        rejections += rej;
        out.push(phi);
    }
    Ok(PosteriorDraws { tag, seed: stream.seed(), stream_id: stream.stream_id(), draws: out, rejections })
}

/// B posterior draws of φ = transform(mixture mean); draw `b` uses substream `b`.
pub fn sample_phi_posterior<F>(
    stream: &RngStream,
    data: &DataMatrix,
    cfg: &DpConfig,
    draws: usize,
    tag: ModelTag,
    transform: F,
) -> Result<PosteriorDraws>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    cfg.validate()?;
    sample_with_rejection(stream, draws, tag, |s| {
        let m = draw_dp_functional(s, data, cfg)?;
        transform(&m)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_data() -> DataMatrix {
        let mut s = RngStream::new(99, 0);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| vec![draw_std_normal(&mut s) + 1.0, 2.0 * draw_std_normal(&mut s)]).collect();
        DataMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn stick_weights_are_a_probability_vector() {
        let mut s = RngStream::new(1, 0);
        for k in [1, 2, 10, 50, 200] {
            let w = stick_weights(&mut s, 3.0, k).unwrap();
            assert_eq!(w.len(), k);
            assert!(w.iter().all(|&v| v >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(stick_weights(&mut s, 3.0, 0).is_err());
    }

    #[test]
    fn truncation_bound_matches_reference_order() {
        let b = truncation_error_bound(500, 3.0, 50);
        assert!((b - 4e-5).abs() < 0.5e-5, "{b}");
    }

    #[test]
    fn zero_truncation_is_parameter_error() {
        let data = toy_data();
        let mut s = RngStream::new(1, 0);
        let cfg = DpConfig::new(3.0, 0);
        assert!(matches!(draw_dp_functional(&mut s, &data, &cfg), Err(Error::Parameter(_))));
    }

    #[test]
    fn bayesian_bootstrap_limit() {
        let data = toy_data();
        let cfg = DpConfig::new(1e-9, 50);
        let stream = RngStream::new(5, 0);
        let draws = sample_phi_posterior(&stream, &data, &cfg, 10_000, ModelTag::Custom, |m| Ok(m.to_vec())).unwrap();
        let mean = draws.mean();
        let cm = data.column_means();
        let sd = [1.0, 2.0];
        for j in 0..2 {
            assert!((mean[j] - cm[j]).abs() < 0.01 * sd[j], "col {j}: {} vs {}", mean[j], cm[j]);
        }
    }

    #[test]
    fn single_observation_collapses() {
        let data = DataMatrix::from_rows(&[vec![3.5, -1.0]]).unwrap();
        let cfg = DpConfig::new(1e-9, 10);
        let mut s = RngStream::new(8, 0);
        for _ in 0..100 {
            let d = draw_dp_functional(&mut s, &data, &cfg).unwrap();
            assert!((d[0] - 3.5).abs() < 1e-8 * 5.0 && (d[1] + 1.0).abs() < 1e-8 * 5.0);
        }
    }

    #[test]
    fn point_mass_base_and_constant_data() {
        let data = DataMatrix::from_vec(50, 1, vec![5.0; 50]).unwrap();
        let cfg = DpConfig::new(3.0, 20).with_base(BaseMeasure::PointMass(vec![5.0]));
        let stream = RngStream::new(3, 0);
        let draws = sample_phi_posterior(&stream, &data, &cfg, 200, ModelTag::Custom, |m| Ok(m.to_vec())).unwrap();
        assert!(draws.draws.iter().all(|d| (d[0] - 5.0).abs() <= 5.0 * 1e-6));
        assert_eq!(draws.rejections, 0);
        let mut s = RngStream::new(3, 1);
        let data2 = DataMatrix::from_vec(10, 2, [1.5, -2.0].repeat(10)).unwrap();
        let cfg2 = DpConfig::new(3.0, 20).with_base(BaseMeasure::PointMass(vec![1.5, -2.0]));
        let (m, cov) = draw_dp_second_moment(&mut s, &data2, &cfg2).unwrap();
        assert!((m[0] - 1.5).abs() < 1e-10 && (m[1] + 2.0).abs() < 1e-10);
        assert!(cov.max_abs() < 1e-10);
    }

    #[test]
    fn functional_lies_in_convex_hull() {
        let data = DataMatrix::from_vec(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let cfg = DpConfig::new(3.0, 10).with_base(BaseMeasure::PointMass(vec![-1.0]));
        let mut s = RngStream::new(4, 0);
        for _ in 0..1000 {
            let v = draw_dp_functional(&mut s, &data, &cfg).unwrap()[0];
            assert!((-1.0 - 1e-12..=3.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn second_moment_matches_bootstrap_moments() {
        let data = toy_data();
        let cfg = DpConfig::new(1e-9, 10);
        let mut s = RngStream::new(6, 0);
        let reps = 10_000;
        let mut sc = [0.0; 3];
        for _ in 0..reps {
            let (_, c) = draw_dp_second_moment(&mut s, &data, &cfg).unwrap();
            assert!(c.is_symmetric(0.0));
            sc[0] += c[(0, 0)];
            sc[1] += c[(1, 1)];
            sc[2] += c[(0, 1)];
        }
        // Under flat Dirichlet weights, E[Σ βᵢ(xᵢ−x̄_β)(yᵢ−ȳ_β)] = n/(n+1) · (1/n)Σ(xᵢ−x̄)(yᵢ−ȳ).
        let n = data.n() as f64;
        let m = data.column_means();
        let mut pc = [0.0; 3];
        for r in data.rows() {
            pc[0] += (r[0] - m[0]).powi(2) / n;
            pc[1] += (r[1] - m[1]).powi(2) / n;
            pc[2] += (r[0] - m[0]) * (r[1] - m[1]) / n;
        }
        let f = n / (n + 1.0);
        for j in 0..2 {
            let got = sc[j] / reps as f64;
            assert!((got - f * pc[j]).abs() < 0.02 * pc[j], "{j}: {got} vs {}", f * pc[j]);
        }
        let got = sc[2] / reps as f64;
        assert!((got - f * pc[2]).abs() < 0.02 * (pc[0] * pc[1]).sqrt());
    }

    #[test]
    fn psd_covariance_draws() {
        let data = toy_data();
        let cfg = DpConfig::new(3.0, 20);
        let mut s = RngStream::new(7, 0);
        for _ in 0..20_000 {
            let (_, c) = draw_dp_second_moment(&mut s, &data, &cfg).unwrap();
            let det = c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)];
            assert!(c[(0, 0)] >= 0.0 && c[(1, 1)] >= 0.0 && det >= -1e-12);
        }
    }

    #[test]
    fn rejection_is_recorded_and_bounded() {
        let data = toy_data();
        let cfg = DpConfig::new(3.0, 10);
        let stream = RngStream::new(9, 0);
        let draws = sample_phi_posterior(&stream, &data, &cfg, 50, ModelTag::Custom, |m| {
            if m[0] > 1.0 {
                Err(Error::Numeric("reject".into()))
            } else {
                Ok(m.to_vec())
            }
        })
        .unwrap();
        assert!(draws.rejections > 0);
        assert!(draws.draws.iter().all(|d| d[0] <= 1.0));
        let err = sample_phi_posterior(&stream, &data, &cfg, 5, ModelTag::Custom, |_| Err(Error::Numeric("never".into())));
        assert!(matches!(err, Err(Error::Numeric(_))));
    }

    #[test]
    fn draws_are_reproducible_and_thread_invariant() {
        let data = toy_data();
        let cfg = DpConfig::new(3.0, 10);
        let stream = RngStream::new(10, 2);
        let a = sample_phi_posterior(&stream, &data, &cfg, 64, ModelTag::Custom, |m| Ok(m.to_vec())).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_phi_posterior(&stream, &data, &cfg, 64, ModelTag::Custom, |m| Ok(m.to_vec())).unwrap());
        assert_eq!(a.draws, b.draws);
    }

    #[test]
    fn csv_roundtrip() {
        let csv = "w1, w2\n1.5,2\n-3e-1, 4.25\n";
        let d = DataMatrix::from_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!((d.n(), d.p()), (2, 2));
        assert_eq!(d.names(), &["w1".to_string(), "w2".to_string()]);
        assert_eq!(d.row(1), &[-0.3, 4.25]);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(DataMatrix::from_csv_reader(buf.as_slice()).unwrap(), d);
        assert!(DataMatrix::from_csv_reader("a,b\n1,x\n".as_bytes()).is_err());
        assert!(DataMatrix::from_csv_reader("a,b\n1,inf\n".as_bytes()).is_err());
        assert!(DataMatrix::from_csv_reader("a\n".as_bytes()).is_err());
    }
}
