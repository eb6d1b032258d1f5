use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crypto::{qotp_encrypt, PadKey};
use crate::error::{Error, Result};
use crate::simulator::StateVector;

use super::group::DlpGroup;

/// Eigenvalue floor accepted as positive semidefinite.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Superposition exponent `k`; the orbit of each sample has `2^k` elements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub k: usize,
    /// The constant in `k = n − t·log n`, carried as metadata only.
    #[serde(default)]
    pub t: Option<f64>,
}

impl FeatureConfig {
    pub fn new(k: usize) -> Self {
        Self { k, t: None }
    }

    pub fn orbit_size(&self) -> u64 {
        1u64 << self.k
    }

    pub fn validate(&self, group: &DlpGroup) -> Result<()> {
        if self.k == 0 || self.k > group.bits() || self.orbit_size() > group.p() - 1 {
            return Err(Error::config(
                "k",
                format!("2^{} orbit does not fit in Z_{}^*", self.k, group.p()),
            ));
        }
        Ok(())
    }
}

/// `{x·a^j mod p : j < 2^k}`, sorted.
pub fn orbit(group: &DlpGroup, cfg: &FeatureConfig, x: u64) -> Result<Vec<u64>> {
    cfg.validate(group)?;
    group.check_unit(x)?;
    let mut out = Vec::with_capacity(cfg.orbit_size() as usize);
    let mut y = x;
    for _ in 0..cfg.orbit_size() {
        out.push(y);
        y = y * group.generator() % group.p();
    }
    out.sort_unstable();
    Ok(out)
}

/// Uniform superposition over the orbit of `x`, on `n = bits(p)` qubits.
pub fn feature_state(group: &DlpGroup, cfg: &FeatureConfig, x: u64) -> Result<StateVector> {
    let labels = orbit(group, cfg, x)?;
    let amp = Complex64::new((labels.len() as f64).sqrt().recip(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << group.bits()];
    for y in labels {
        amps[y as usize] = amp;
    }
    StateVector::from_amplitudes(amps)
}

/// `|S_{x1} ∩ S_{x2}| / 2^k`.
pub fn kernel_entry(group: &DlpGroup, cfg: &FeatureConfig, x1: u64, x2: u64) -> Result<f64> {
    let s1 = orbit(group, cfg, x1)?;
    let s2 = orbit(group, cfg, x2)?;
    let (mut i, mut j, mut common) = (0, 0, 0u64);
    while i < s1.len() && j < s2.len() {
        match s1[i].cmp(&s2[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(common as f64 / cfg.orbit_size() as f64)
}

/// `Re⟨φ(x1)|P†P'|φ(x2)⟩` for feature states padded with `pad1` and `pad2`;
/// refuses mismatched pads.
pub fn padded_kernel_entry(group: &DlpGroup, cfg: &FeatureConfig, x1: u64, pad1: &PadKey, x2: u64, pad2: &PadKey) -> Result<f64> {
    if pad1 != pad2 {
        return Err(Error::Protocol(
            "kernel entries need both feature states under the same pad".into(),
        ));
    }
    let p1 = qotp_encrypt(&feature_state(group, cfg, x1)?, pad1)?;
    let p2 = qotp_encrypt(&feature_state(group, cfg, x2)?, pad2)?;
    Ok(p1.inner_product(&p2)?.re)
}

/// Square Gram matrix with the sample each row belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    samples: Vec<u64>,
    values: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn new(samples: Vec<u64>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != samples.len() || values.ncols() != samples.len() {
            return Err(Error::domain("kernel matrix shape does not match its samples"));
        }
        Ok(Self { samples, values })
    }

    pub fn samples(&self) -> &[u64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn max_abs_diff(&self, other: &KernelMatrix) -> Result<f64> {
        if self.values.shape() != other.values.shape() {
            return Err(Error::domain("kernel matrices of different sizes"));
        }
        Ok((&self.values - &other.values).abs().max())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (&self.values - self.values.transpose()).abs().max() <= tol
    }

    pub fn has_unit_diagonal(&self, tol: f64) -> bool {
        self.values.diagonal().iter().all(|d| (d - 1.0).abs() <= tol)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let sym = (&self.values + self.values.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.min()
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOLERANCE
    }

    /// Rows `rows` and columns `cols` as a plain matrix.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.values[(rows[r], cols[c])])
    }

    /// Header `x,<samples...>`, then one row per sample.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(w);
        let mut header = vec!["x".to_string()];
        header.extend(self.samples.iter().map(u64::to_string));
        writer.write_record(&header)?;
        for (i, x) in self.samples.iter().enumerate() {
            let mut row = vec![x.to_string()];
            row.extend((0..self.len()).map(|j| self.values[(i, j)].to_string()));
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Plaintext Gram matrix from orbit overlaps.
pub fn kernel_matrix(group: &DlpGroup, cfg: &FeatureConfig, samples: &[u64]) -> Result<KernelMatrix> {
    let n = samples.len();
    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel_entry(group, cfg, samples[i], samples[j])?;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    KernelMatrix::new(samples.to_vec(), values)
}
