//! Soft-margin support vector classification.
//!
//! The dual
//!
//! ```text
//! max  Σ αₗ − ½ Σ Σ αₗ αₘ yₗ yₘ K(xₗ, xₘ)   s.t.  Σ αₗ yₗ = 0,  0 ≤ αₗ ≤ C
//! ```
//!
//! is solved by [`smo`], and a trained [`SvmModel`] scores a sample with
//! `Σ αₗ yₗ K(x, xₗ) + b` over its support vectors.

pub mod grid;
pub mod smo;

pub use grid::{grid_search, grid_search_grouped, GridCell, GridResult, GridSpec};
pub use smo::{smo_train, solve_dual, DualSolution, SmoConfig};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
    Sigmoid,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Rbf => "rbf",
            KernelKind::Sigmoid => "sigmoid",
        }
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelKind::Linear),
            "polynomial" => Ok(KernelKind::Polynomial),
            "rbf" => Ok(KernelKind::Rbf),
            "sigmoid" => Ok(KernelKind::Sigmoid),
            other => Err(Error::InvalidParameter(format!("unknown kernel {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    pub coef0: f64,
    pub degree: u32,
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            gamma: 1.0,
            coef0: 0.0,
            degree: 1,
        }
    }

    pub fn rbf(gamma: f64) -> Self {
        Self {
            kind: KernelKind::Rbf,
            gamma,
            coef0: 0.0,
            degree: 3,
        }
    }

    pub fn polynomial(gamma: f64, coef0: f64, degree: u32) -> Self {
        Self {
            kind: KernelKind::Polynomial,
            gamma,
            coef0,
            degree,
        }
    }

    pub fn sigmoid(gamma: f64, coef0: f64) -> Self {
        Self {
            kind: KernelKind::Sigmoid,
            gamma,
            coef0,
            degree: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || !self.coef0.is_finite() {
            return Err(Error::InvalidParameter(
                "non-finite kernel parameter".into(),
            ));
        }
        if matches!(self.kind, KernelKind::Polynomial | KernelKind::Rbf) && self.gamma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{} kernel needs gamma > 0, got {}",
                self.kind.as_str(),
                self.gamma
            )));
        }
        Ok(())
    }

    /// Kernel value without length checks.
    #[inline]
    pub fn apply(&self, x: &[f64], z: &[f64]) -> f64 {
        let dot = || x.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        match self.kind {
            KernelKind::Linear => dot(),
            KernelKind::Polynomial => (self.gamma * dot() + self.coef0).powi(self.degree as i32),
            KernelKind::Rbf => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.gamma * d2).exp()
            }
            KernelKind::Sigmoid => (self.gamma * dot() + self.coef0).tanh(),
        }
    }

    /// Full row-major Gram matrix of `xs`.
    pub fn gram(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        let n = xs.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.apply(&xs[i], &xs[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    spec.validate()?;
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "kernel arguments of length {} and {}",
            x.len(),
            z.len()
        )));
    }
    Ok(spec.apply(x, z))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `αₗ yₗ` for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    pub c_penalty: f64,
}

const MODEL_MAGIC: &str = "laa-thrombus-svm";
const MODEL_VERSION: u32 = 1;

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if !self.support_vectors.is_empty() && x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "model dimension {}, sample dimension {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, coef)| coef * self.kernel.apply(x, sv))
            .sum::<f64>()
            + self.bias)
    }

    /// `+1` or `-1`; a zero decision value counts as `+1`.
    pub fn classify(&self, x: &[f64]) -> Result<f64> {
        Ok(sign(self.decision_value(x)?))
    }

    /// Versioned plain-text encoding: a `key value` header followed by one
    /// line per support vector holding its coefficient and then the vector.
    pub fn to_text(&self) -> String {
        let k = &self.kernel;
        let mut out = format!(
            "{MODEL_MAGIC} {MODEL_VERSION}\nkernel {}\ngamma {}\ncoef0 {}\ndegree {}\nc {}\nbias {}\nn_sv {}\ndim {}\n",
            k.kind.as_str(),
            k.gamma,
            k.coef0,
            k.degree,
            self.c_penalty,
            self.bias,
            self.support_vectors.len(),
            self.dim()
        );
        for (sv, coef) in self.support_vectors.iter().zip(&self.dual_coefs) {
            let _ = write!(out, "{coef}");
            for v in sv {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::ModelFormat(m);
        let mut lines = text.lines();
        let mut next = |what: &str| lines.next().ok_or_else(|| bad(format!("missing {what}")));

        let head = next("header")?;
        if head != format!("{MODEL_MAGIC} {MODEL_VERSION}") {
            return Err(bad(format!("unexpected header {head:?}")));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = next(key)?;
            match line.split_once(' ') {
                Some((k, v)) if k == key => Ok(v.trim().to_string()),
                _ => Err(bad(format!("expected `{key} <value>`, got {line:?}"))),
            }
        };
        let num = |key: &str, v: String| -> Result<f64> {
            v.parse()
                .map_err(|_| bad(format!("{key}: not a number: {v:?}")))
        };
        let kind: KernelKind = field("kernel")?.parse()?;
        let gamma = num("gamma", field("gamma")?)?;
        let coef0 = num("coef0", field("coef0")?)?;
        let degree = field("degree")?
            .parse()
            .map_err(|_| bad("degree: not an integer".into()))?;
        let c_penalty = num("c", field("c")?)?;
        let bias = num("bias", field("bias")?)?;
        let n_sv: usize = field("n_sv")?
            .parse()
            .map_err(|_| bad("n_sv: not an integer".into()))?;
        let dim: usize = field("dim")?
            .parse()
            .map_err(|_| bad("dim: not an integer".into()))?;

        let mut support_vectors = Vec::with_capacity(n_sv);
        let mut dual_coefs = Vec::with_capacity(n_sv);
        for k in 0..n_sv {
            let line = next("support vector")?;
            let values = line
                .split_whitespace()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad(format!("support vector {k}: non-numeric field")))?;
            if values.len() != dim + 1 {
                return Err(bad(format!(
                    "support vector {k}: {} fields, expected {}",
                    values.len(),
                    dim + 1
                )));
            }
            dual_coefs.push(values[0]);
            support_vectors.push(values[1..].to_vec());
        }
        let kernel = KernelSpec {
            kind,
            gamma,
            coef0,
            degree,
        };
        kernel.validate()?;
        Ok(Self {
            support_vectors,
            dual_coefs,
            bias,
            kernel,
            c_penalty,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[inline]
pub fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_values() {
        let rbf = KernelSpec::rbf(0.5);
        assert_eq!(kernel_eval(&rbf, &[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(
            kernel_eval(&KernelSpec::linear(), &[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            11.0
        );
        let v = kernel_eval(&rbf, &[0.0, 0.0], &[0.0, 2.0]).unwrap();
        assert!((v - 0.135_335_283_236_612_7).abs() < 1e-15);
        let poly = KernelSpec::polynomial(2.0, 1.0, 3);
        assert_eq!(kernel_eval(&poly, &[1.0], &[2.0]).unwrap(), 125.0);
        let sig = KernelSpec::sigmoid(0.5, -1.0);
        assert_eq!(kernel_eval(&sig, &[1.0], &[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn kernel_errors() {
        assert!(kernel_eval(&KernelSpec::linear(), &[1.0], &[1.0, 2.0]).is_err());
        assert!(kernel_eval(&KernelSpec::rbf(0.0), &[1.0], &[1.0]).is_err());
        assert!(kernel_eval(&KernelSpec::polynomial(-1.0, 0.0, 2), &[1.0], &[1.0]).is_err());
        assert!(kernel_eval(&KernelSpec::sigmoid(-1.0, 0.0), &[1.0], &[1.0]).is_ok());
    }

    #[test]
    fn model_text_round_trip() {
        let model = SvmModel {
            support_vectors: vec![vec![0.1, 0.2], vec![1.0 / 3.0, -7.5e-9]],
            dual_coefs: vec![0.5, -0.5],
            bias: -0.0125,
            kernel: KernelSpec::rbf(0.125),
            c_penalty: 8.0,
        };
        let text = model.to_text();
        assert!(text.starts_with("laa-thrombus-svm 1\nkernel rbf\n"));
        assert_eq!(SvmModel::from_text(&text).unwrap(), model);
    }

    #[test]
    fn malformed_models_are_rejected() {
        assert!(SvmModel::from_text("").is_err());
        assert!(SvmModel::from_text("laa-thrombus-svm 2\n").is_err());
        let model = SvmModel {
            support_vectors: vec![vec![1.0, 2.0]],
            dual_coefs: vec![1.0],
            bias: 0.0,
            kernel: KernelSpec::linear(),
            c_penalty: 1.0,
        };
        let text = model.to_text().replace("1 1 2", "1 1");
        assert!(SvmModel::from_text(&text).is_err());
    }

    #[test]
    fn classify_maps_zero_to_positive() {
        let model = SvmModel {
            support_vectors: vec![vec![1.0]],
            dual_coefs: vec![1.0],
            bias: 0.0,
            kernel: KernelSpec::linear(),
            c_penalty: 1.0,
        };
        assert_eq!(model.classify(&[0.0]).unwrap(), 1.0);
        assert_eq!(model.classify(&[-0.1]).unwrap(), -1.0);
        assert!(model.decision_value(&[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn rbf_gram_is_positive_semidefinite(
            rows in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 3), 2..12),
            gamma in 0.01f64..5.0,
        ) {
            let n = rows.len();
            let k = KernelSpec::rbf(gamma).gram(&rows);
            let m = nalgebra::DMatrix::from_row_slice(n, n, &k);
            prop_assert_eq!(&m, &m.transpose());
            let eig = m.symmetric_eigenvalues();
            prop_assert!(eig.iter().all(|e| *e >= -1e-9), "{:?}", eig);
        }
    }
}
