//! Gauss–Laguerre quadrature for expectations over an exponential variable.

use crate::error::{Error, Result};

/// Nodes and weights for `∫₀^∞ e^{-x} g(x) dx ≈ Σ wᵢ g(xᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    /// Newton iteration on `L_n` from asymptotic starting guesses.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("gauss-laguerre", "need at least one node"));
        }
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut z = 0.0f64;
        for i in 0..n {
            z = match i {
                0 => 3.0 / (1.0 + 2.4 * nf),
                1 => z + 15.0 / (1.0 + 2.5 * nf),
                _ => {
                    let ai = (i - 1) as f64;
                    z + ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - nodes[i - 2])
                }
            };
            let mut converged = false;
            let (mut p2, mut pp) = (0.0, 0.0);
            for _ in 0..100 {
                let mut p1 = 1.0;
                p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
                }
                pp = (nf * p1 - nf * p2) / z;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::domain("gauss-laguerre", format!("node {i} did not converge")));
            }
            nodes[i] = z;
            weights[i] = -1.0 / (pp * nf * p2);
        }
        Ok(Self { nodes, weights })
    }

    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}
