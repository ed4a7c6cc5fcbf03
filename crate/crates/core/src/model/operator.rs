use std::fmt;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use super::{complex_gaussian, C64};
use crate::error::{check_len, Error, Result};

/// A linear map `C^n -> C^m` with an adjoint.
pub trait LinearOperator {
    /// Input (signal) dimension.
    fn n(&self) -> usize;
    /// Output (measurement) dimension.
    fn m(&self) -> usize;
    fn forward(&self, x: &[C64]) -> Result<Vec<C64>>;
    fn adjoint(&self, u: &[C64]) -> Result<Vec<C64>>;
}

/// `S F`: the unitary DFT followed by row selection.
///
/// Never materialized; both directions cost one FFT of length `n`.
#[derive(Clone)]
pub struct PartialDftOperator {
    n: usize,
    rows: Vec<usize>,
    mask: Vec<bool>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for PartialDftOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartialDftOperator")
            .field("n", &self.n)
            .field("m", &self.rows.len())
            .finish()
    }
}

impl PartialEq for PartialDftOperator {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.rows == other.rows
    }
}

impl PartialDftOperator {
    /// Builds the operator from an explicit row list. Rows keep the given
    /// order; output entry `i` is DFT coefficient `rows[i]`.
    pub fn new(n: usize, rows: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if rows.is_empty() || rows.len() > n {
            return Err(Error::invalid(
                "selected_rows",
                format!("need 0 < M <= N, got M = {} with N = {n}", rows.len()),
            ));
        }
        let mut mask = vec![false; n];
        for &r in &rows {
            if r >= n {
                return Err(Error::invalid(
                    "selected_rows",
                    format!("row {r} out of range"),
                ));
            }
            if std::mem::replace(&mut mask[r], true) {
                return Err(Error::invalid("selected_rows", format!("row {r} repeated")));
            }
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
            rows,
            mask,
        })
    }

    /// `m` rows drawn uniformly without replacement, sorted ascending.
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::invalid(
                "m",
                format!("need 0 < M <= N, got M = {m}, N = {n}"),
            ));
        }
        let mut rows = index::sample(rng, n, m).into_vec();
        rows.sort_unstable();
        Self::new(n, rows)
    }

    pub fn selected_rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn is_selected(&self, row: usize) -> bool {
        self.mask[row]
    }

    /// Row-selection mask, `diag(S^H S)`.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Full unitary DFT `F x`.
    pub fn dft(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(self.n, x.len())?;
        let mut buf = x.to_vec();
        self.fft.process(&mut buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
        Ok(buf)
    }

    /// Full inverse unitary DFT `F^H z`.
    pub fn idft(&self, z: &[C64]) -> Result<Vec<C64>> {
        check_len(self.n, z.len())?;
        let mut buf = z.to_vec();
        self.ifft.process(&mut buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
        Ok(buf)
    }

    /// Restricts a length-`n` transform-domain vector to the selected rows.
    pub fn select(&self, z: &[C64]) -> Vec<C64> {
        self.rows.iter().map(|&r| z[r]).collect()
    }

    /// Zero-pads `u` into the selected rows (`S^H u`).
    pub fn embed(&self, u: &[C64]) -> Vec<C64> {
        let mut z = vec![C64::new(0.0, 0.0); self.n];
        for (&r, &v) in self.rows.iter().zip(u) {
            z[r] = v;
        }
        z
    }
}

impl LinearOperator for PartialDftOperator {
    fn n(&self) -> usize {
        self.n
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn forward(&self, x: &[C64]) -> Result<Vec<C64>> {
        Ok(self.select(&self.dft(x)?))
    }

    fn adjoint(&self, u: &[C64]) -> Result<Vec<C64>> {
        check_len(self.m(), u.len())?;
        self.idft(&self.embed(u))
    }
}

/// Dense `m x n` matrix with i.i.d. `CN(0, 1/n)` entries, row-major.
///
/// The per-entry variance is `1/n`, not `1/m`, so its columns have the same
/// expected squared norm `m/n` as a partial DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct IidGaussianOperator {
    m: usize,
    n: usize,
    entries: Vec<C64>,
}

impl IidGaussianOperator {
    pub fn sample<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("dimensions", "m and n must be positive"));
        }
        let var = 1.0 / n as f64;
        let entries = (0..m * n).map(|_| complex_gaussian(rng, var)).collect();
        Ok(Self { m, n, entries })
    }

    pub fn from_entries(m: usize, n: usize, entries: Vec<C64>) -> Result<Self> {
        check_len(m * n, entries.len())?;
        Ok(Self { m, n, entries })
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.n + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }
}

impl LinearOperator for IidGaussianOperator {
    fn n(&self) -> usize {
        self.n
    }

    fn m(&self) -> usize {
        self.m
    }

    fn forward(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(self.n, x.len())?;
        Ok(self
            .entries
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn adjoint(&self, u: &[C64]) -> Result<Vec<C64>> {
        check_len(self.m, u.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        for (row, &ui) in self.entries.chunks_exact(self.n).zip(u) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * ui;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensingOperator {
    PartialDft(PartialDftOperator),
    IidGaussian(IidGaussianOperator),
}

impl SensingOperator {
    pub fn kind(&self) -> &'static str {
        match self {
            SensingOperator::PartialDft(_) => "partial-dft",
            SensingOperator::IidGaussian(_) => "iid-gaussian",
        }
    }
}

impl From<PartialDftOperator> for SensingOperator {
    fn from(op: PartialDftOperator) -> Self {
        SensingOperator::PartialDft(op)
    }
}

impl From<IidGaussianOperator> for SensingOperator {
    fn from(op: IidGaussianOperator) -> Self {
        SensingOperator::IidGaussian(op)
    }
}

impl LinearOperator for SensingOperator {
    fn n(&self) -> usize {
        match self {
            SensingOperator::PartialDft(op) => op.n(),
            SensingOperator::IidGaussian(op) => op.n(),
        }
    }

    fn m(&self) -> usize {
        match self {
            SensingOperator::PartialDft(op) => op.m(),
            SensingOperator::IidGaussian(op) => op.m(),
        }
    }

    fn forward(&self, x: &[C64]) -> Result<Vec<C64>> {
        match self {
            SensingOperator::PartialDft(op) => op.forward(x),
            SensingOperator::IidGaussian(op) => op.forward(x),
        }
    }

    fn adjoint(&self, u: &[C64]) -> Result<Vec<C64>> {
        match self {
            SensingOperator::PartialDft(op) => op.adjoint(u),
            SensingOperator::IidGaussian(op) => op.adjoint(u),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::norm_sqr;
    use crate::rng::{substream, Purpose};
    use std::f64::consts::PI;

    fn random_vec(len: usize, seed: u64) -> Vec<C64> {
        let mut rng = substream(seed, 0, Purpose::Oracle);
        (0..len).map(|_| complex_gaussian(&mut rng, 1.0)).collect()
    }

    // Entry (k, j) of the unitary DFT, straight from its definition.
    fn dft_entry(n: usize, k: usize, j: usize) -> C64 {
        let angle = -2.0 * PI * (k * j) as f64 / n as f64;
        C64::from_polar(1.0 / (n as f64).sqrt(), angle)
    }

    fn inner(a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    }

    #[test]
    fn delta_maps_to_flat_spectrum() {
        let n = 16;
        let op = PartialDftOperator::new(n, vec![0, 3, 7, 12]).unwrap();
        let mut e0 = vec![C64::new(0.0, 0.0); n];
        e0[0] = C64::new(1.0, 0.0);
        for v in op.forward(&e0).unwrap() {
            assert!((v - C64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn full_row_set_is_an_isometry() {
        let n = 64;
        let op = PartialDftOperator::new(n, (0..n).collect()).unwrap();
        let x = random_vec(n, 1);
        let y = op.forward(&x).unwrap();
        assert!((norm_sqr(&y).sqrt() - norm_sqr(&x).sqrt()).abs() < 1e-12 * norm_sqr(&x).sqrt());
        let back = op.adjoint(&y).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_dense_matrix() {
        let (n, m) = (16, 8);
        let mut rng = substream(3, 0, Purpose::Rows);
        let op = PartialDftOperator::random(n, m, &mut rng).unwrap();
        let x = random_vec(n, 2);
        let fast = op.forward(&x).unwrap();
        for (i, &k) in op.selected_rows().iter().enumerate() {
            let dense: C64 = (0..n).map(|j| dft_entry(n, k, j) * x[j]).sum();
            assert!((fast[i] - dense).norm() < 1e-12);
        }
        let u = random_vec(m, 4);
        let fast_adj = op.adjoint(&u).unwrap();
        for (j, &fast_j) in fast_adj.iter().enumerate() {
            let dense: C64 = op
                .selected_rows()
                .iter()
                .zip(&u)
                .map(|(&k, &ui)| dft_entry(n, k, j).conj() * ui)
                .sum();
            assert!((fast_j - dense).norm() < 1e-12);
        }
    }

    #[test]
    fn adjoint_identity() {
        let (n, m) = (32, 20);
        let op = PartialDftOperator::random(n, m, &mut substream(5, 0, Purpose::Rows)).unwrap();
        let x = random_vec(n, 6);
        let u = random_vec(m, 7);
        let lhs = inner(&op.forward(&x).unwrap(), &u);
        let rhs = inner(&x, &op.adjoint(&u).unwrap());
        assert!((lhs - rhs).norm() < 1e-12);
        assert!(op
            .adjoint(&vec![C64::new(0.0, 0.0); m])
            .unwrap()
            .iter()
            .all(|z| z.norm() == 0.0));
    }

    #[test]
    fn column_norms_are_m_over_n() {
        let (n, m) = (24, 10);
        let op = PartialDftOperator::random(n, m, &mut substream(8, 0, Purpose::Rows)).unwrap();
        for j in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            let col = op.forward(&e).unwrap();
            assert!((norm_sqr(&col) - m as f64 / n as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn row_selection_is_uniform() {
        let (n, m, draws) = (16, 8, 10_000);
        let mut rng = substream(99, 0, Purpose::Rows);
        let mut counts = [0usize; 16];
        for _ in 0..draws {
            let op = PartialDftOperator::random(n, m, &mut rng).unwrap();
            for &r in op.selected_rows() {
                counts[r] += 1;
            }
        }
        let band = 5.0 * (0.25f64 / draws as f64).sqrt();
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.5).abs() < band, "frequency {freq}");
        }
    }

    #[test]
    fn invalid_rows_rejected() {
        assert!(PartialDftOperator::new(8, vec![]).is_err());
        assert!(PartialDftOperator::new(8, vec![1, 1]).is_err());
        assert!(PartialDftOperator::new(8, vec![8]).is_err());
        assert!(PartialDftOperator::random(8, 9, &mut substream(0, 0, Purpose::Rows)).is_err());
    }

    #[test]
    fn length_mismatch_rejected() {
        let op = PartialDftOperator::new(8, vec![0, 2]).unwrap();
        assert!(matches!(
            op.forward(&[C64::new(0.0, 0.0); 7]),
            Err(Error::LengthMismatch {
                expected: 8,
                actual: 7
            })
        ));
        assert!(op.adjoint(&[C64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn iid_entry_variance_is_one_over_n() {
        let (m, n) = (200, 400);
        let op =
            IidGaussianOperator::sample(m, n, &mut substream(1, 0, Purpose::IidMatrix)).unwrap();
        let var = norm_sqr(op.entries()) / (m * n) as f64;
        // 80k entries, |a|^2 ~ Exp(1/n): relative sd 1/sqrt(80k) ~ 0.35%.
        assert!(
            (var * n as f64 - 1.0).abs() < 0.02,
            "n * var = {}",
            var * n as f64
        );
    }

    #[test]
    fn iid_adjoint_identity() {
        let (m, n) = (12, 20);
        let op =
            IidGaussianOperator::sample(m, n, &mut substream(2, 0, Purpose::IidMatrix)).unwrap();
        let x = random_vec(n, 10);
        let u = random_vec(m, 11);
        let lhs = inner(&op.forward(&x).unwrap(), &u);
        let rhs = inner(&x, &op.adjoint(&u).unwrap());
        assert!((lhs - rhs).norm() < 1e-12);
        let y = op.forward(&x).unwrap();
        let direct: C64 = (0..n).map(|j| op.entry(3, j) * x[j]).sum();
        assert!((y[3] - direct).norm() < 1e-14);
    }
}
