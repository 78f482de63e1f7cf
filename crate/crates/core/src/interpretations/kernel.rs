use std::fmt;

use crate::error::{Error, Result};

/// Normalization slack accepted for kernel inputs.
pub const INPUT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// Every row is the post-step distribution.
    IndependentResample,
    /// Keeps `min(p_i, q_i)` in place and spreads the excess over the
    /// deficits in proportion.
    #[default]
    MinimalTransport,
}

impl KernelKind {
    pub fn parse(s: &str) -> Option<KernelKind> {
        match s {
            "independent" | "INDEPENDENT_RESAMPLE" => Some(KernelKind::IndependentResample),
            "minimal" | "MINIMAL_TRANSPORT" => Some(KernelKind::MinimalTransport),
            _ => None,
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::IndependentResample => "INDEPENDENT_RESAMPLE",
            KernelKind::MinimalTransport => "MINIMAL_TRANSPORT",
        })
    }
}

/// Row-stochastic matrix `K(j | i)` carrying `pre` onto `post`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportKernel {
    kind: KernelKind,
    pre: Vec<f64>,
    post: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|x| !x.is_finite() || *x < -1e-12) {
        return Err(Error::Unnormalized { sum: f64::NAN });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > INPUT_TOL {
        return Err(Error::Unnormalized { sum });
    }
    Ok(())
}

pub fn build_kernel(pre: &[f64], post: &[f64], kind: KernelKind) -> Result<TransportKernel> {
    if pre.len() != post.len() {
        return Err(Error::DimensionMismatch {
            expected: pre.len(),
            got: post.len(),
        });
    }
    check_distribution(pre)?;
    check_distribution(post)?;
    let pre: Vec<f64> = pre.iter().map(|x| x.max(0.0)).collect();
    let post: Vec<f64> = post.iter().map(|x| x.max(0.0)).collect();
    let n = pre.len();
    let rows = match kind {
        KernelKind::IndependentResample => vec![post.clone(); n],
        KernelKind::MinimalTransport => {
            let stay: Vec<f64> = pre.iter().zip(&post).map(|(p, q)| p.min(*q)).collect();
            let deficit: Vec<f64> = post.iter().zip(&stay).map(|(q, s)| q - s).collect();
            let total_deficit: f64 = deficit.iter().sum();
            (0..n)
                .map(|i| {
                    if pre[i] <= 0.0 {
                        return post.clone();
                    }
                    let excess = (pre[i] - stay[i]) / pre[i];
                    let mut row = vec![0.0; n];
                    if total_deficit > 0.0 {
                        for (r, d) in row.iter_mut().zip(&deficit) {
                            *r = excess * d / total_deficit;
                        }
                    }
                    row[i] += stay[i] / pre[i];
                    row
                })
                .collect()
        }
    };
    Ok(TransportKernel {
        kind,
        pre,
        post,
        rows,
    })
}

impl TransportKernel {
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn pre(&self) -> &[f64] {
        &self.pre
    }

    pub fn post(&self) -> &[f64] {
        &self.post
    }

    /// `Σ_i p_i K(j | i)` for every `j`.
    pub fn push_forward(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows.len()];
        for (pi, row) in p.iter().zip(&self.rows) {
            for (o, k) in out.iter_mut().zip(row) {
                *o += pi * k;
            }
        }
        out
    }

    /// Largest `|Σ_i p_i K(j | i) − q_j|`.
    pub fn marginal_error(&self) -> f64 {
        self.push_forward(&self.pre)
            .iter()
            .zip(&self.post)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|Σ_j K(j | i) − 1|` over rows.
    pub fn row_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Probability that the configuration changes class, where `class` maps
    /// configurations to labels of interest.
    pub fn change_probability(&self, class: impl Fn(usize) -> usize) -> f64 {
        let mut p = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            for (j, k) in row.iter().enumerate() {
                if class(i) != class(j) {
                    p += self.pre[i] * k;
                }
            }
        }
        p
    }

    /// Draws a successor of `i` from the uniform variate `u`.
    pub fn draw(&self, i: usize, u: f64) -> usize {
        let row = &self.rows[i];
        let mut acc = 0.0;
        let mut last = i;
        for (j, k) in row.iter().enumerate() {
            if *k <= 0.0 {
                continue;
            }
            acc += k;
            last = j;
            if u < acc {
                return j;
            }
        }
        last
    }
}

/// Total-variation distance between two distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
