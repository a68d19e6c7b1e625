use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use super::SimError;
use crate::linalg::DenseMatrix;
use crate::model::center_columns;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignMode {
    /// Independent columns.
    Ind,
    /// Neighbouring columns correlated through a latent AR(1) process.
    Dep,
}

impl DesignMode {
    pub fn name(self) -> &'static str {
        match self {
            DesignMode::Ind => "ind",
            DesignMode::Dep => "dep",
        }
    }
}

impl fmt::Display for DesignMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ind" => Ok(DesignMode::Ind),
            "dep" => Ok(DesignMode::Dep),
            other => Err(SimError::Spec(format!("unknown design mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignSpec {
    pub n: usize,
    pub p_total: usize,
    pub mode: DesignMode,
    pub dep_rho: f64,
    /// Minor allele frequencies are drawn uniformly from this range.
    pub maf_range: (f64, f64),
    pub seed: u64,
}

impl DesignSpec {
    pub fn new(n: usize, p_total: usize, mode: DesignMode, seed: u64) -> Self {
        Self {
            n,
            p_total,
            mode,
            dep_rho: 0.95,
            maf_range: (0.05, 0.5),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n < 2 {
            return Err(SimError::Spec(format!("need at least 2 samples, got {}", self.n)));
        }
        if !(0.0..1.0).contains(&self.dep_rho) {
            return Err(SimError::Spec(format!("dep_rho must lie in [0, 1), got {}", self.dep_rho)));
        }
        let (lo, hi) = self.maf_range;
        if !(lo > 0.0 && lo <= hi && hi <= 0.5) {
            return Err(SimError::Spec(format!("maf range must satisfy 0 < lo <= hi <= 0.5, got [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Uncentered genotype dosages in `{0, 1, 2}`.
///
/// `Ind` draws each entry as `Binomial(2, maf_j)`. `Dep` sums two latent
/// haplotypes, each a standard Gaussian AR(1) sequence along the columns,
/// thresholded at the `maf_j` quantile so that every column keeps its
/// allele frequency while neighbours share most of their latent signal.
pub fn gen_genotypes(spec: &DesignSpec) -> Result<DenseMatrix, SimError> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let (n, p) = (spec.n, spec.p_total);
    let (lo, hi) = spec.maf_range;
    let draw_maf = |rng: &mut ChaCha20Rng| if lo < hi { rng.random_range(lo..hi) } else { lo };
    let mut x = DenseMatrix::zeros(n, p);
    match spec.mode {
        DesignMode::Ind => {
            for j in 0..p {
                let maf = draw_maf(&mut rng);
                let binom = Binomial::new(2, maf).expect("maf lies in (0, 0.5]");
                for v in x.col_mut(j) {
                    *v = binom.sample(&mut rng) as f64;
                }
            }
        }
        DesignMode::Dep => {
            let std_normal = Normal::standard();
            let rho = spec.dep_rho;
            let innov = (1.0 - rho * rho).sqrt();
            let mut hap: [Vec<f64>; 2] = std::array::from_fn(|_| vec![0.0; n]);
            for j in 0..p {
                for h in hap.iter_mut() {
                    for u in h.iter_mut() {
                        let e: f64 = rng.sample(StandardNormal);
                        *u = if j == 0 { e } else { rho * *u + innov * e };
                    }
                }
                let cut = std_normal.inverse_cdf(draw_maf(&mut rng));
                let col = x.col_mut(j);
                for (i, v) in col.iter_mut().enumerate() {
                    *v = f64::from(u8::from(hap[0][i] < cut) + u8::from(hap[1][i] < cut));
                }
            }
        }
    }
    Ok(x)
}

/// Column-centered genotype design.
pub fn gen_design(spec: &DesignSpec) -> Result<DenseMatrix, SimError> {
    let mut x = gen_genotypes(spec)?;
    center_columns(&mut x);
    Ok(x)
}
