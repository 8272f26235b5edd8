//! Monte-Carlo estimates of single `L` and `R` coefficients.
//!
//! `(v, w)` are drawn from `M ⊗ M` and ω from the kernel's own density
//! around `û = (w − v)/|w − v|`: the polar cosine `t = û·ω` has density
//! `b(t)/2` on `[−1, 1]` (sampled by an inverse-CDF table) and the azimuth is
//! uniform. Each entry uses its own ChaCha stream derived from `(seed, entry)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{hermite_values, HermiteBasis, MultiIndex};
use crate::error::{Error, Result};
use crate::kernel::CollisionKernel;
use crate::quadrature::GaussLegendre;

/// Minimum number of samples per estimate.
pub const MIN_SAMPLES: usize = 10_000;
/// Floor on the standard error when scoring deviations. Entries built from
/// conserved quantities have per-sample variance at rounding level, while the
/// exact value carries rounding of its own.
pub const STD_ERROR_FLOOR: f64 = 1e-12;

const CELLS: usize = 16_384;

/// Inverse CDF of the polar density `b(t)/2` on `[−1, 1]`.
#[derive(Clone, Debug)]
pub struct PolarSampler {
    nodes: Vec<f64>,
    cdf: Vec<f64>,
    dens: Vec<f64>,
}

impl PolarSampler {
    pub fn new(kernel: &CollisionKernel) -> Self {
        let gl = GaussLegendre::new(12);
        let b = kernel.function();
        let h = 2.0 / CELLS as f64;
        let nodes: Vec<f64> = (0..=CELLS).map(|i| -1.0 + i as f64 * h).collect();
        let dens: Vec<f64> = nodes.iter().map(|&t| 0.5 * b(t)).collect();
        let mut cdf = vec![0.0; CELLS + 1];
        for i in 0..CELLS {
            cdf[i + 1] = cdf[i] + gl.integrate(&|t| 0.5 * b(t), nodes[i], nodes[i + 1]);
        }
        let total = cdf[CELLS];
        for c in cdf.iter_mut() {
            *c /= total;
        }
        let dens = dens.into_iter().map(|d| d / total).collect();
        Self { nodes, cdf, dens }
    }

    /// Maps a uniform `u ∈ [0, 1)` to `t`.
    pub fn sample_t(&self, u: f64) -> f64 {
        let i = match self.cdf.binary_search_by(|c| c.total_cmp(&u)) {
            Ok(i) => i.min(CELLS - 1),
            Err(i) => i.saturating_sub(1).min(CELLS - 1),
        };
        let (t0, t1) = (self.nodes[i], self.nodes[i + 1]);
        let h = t1 - t0;
        let mass = self.cdf[i + 1] - self.cdf[i];
        if mass <= 0.0 {
            return t0 + 0.5 * h;
        }
        let target = (u - self.cdf[i]) / mass;
        // density linear across the cell, renormalized to the exact cell mass
        let (p0, p1) = (self.dens[i], self.dens[i + 1]);
        let a = 0.5 * (p1 - p0) / h;
        let g = target * h * 0.5 * (p0 + p1);
        let s = if g <= 0.0 {
            0.0
        } else if a.abs() < 1e-14 * (p0 + p1).max(1e-300) / h {
            if p0 + p1 > 0.0 {
                g / (0.5 * (p0 + p1))
            } else {
                target * h
            }
        } else {
            // a s² + p0 s − g = 0, stable root
            2.0 * g / (p0 + (p0 * p0 + 4.0 * a * g).max(0.0).sqrt())
        };
        t0 + s.clamp(0.0, h)
    }

    /// CDF at `t` from the table (piecewise linear density within cells).
    pub fn cdf_at(&self, t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        let h = 2.0 / CELLS as f64;
        let i = (((t + 1.0) / h) as usize).min(CELLS - 1);
        let s = t - self.nodes[i];
        let (p0, p1) = (self.dens[i], self.dens[i + 1]);
        let raw = p0 * s + 0.5 * (p1 - p0) / h * s * s;
        let full = 0.5 * (p0 + p1) * h;
        let mass = self.cdf[i + 1] - self.cdf[i];
        self.cdf[i] + if full > 0.0 { raw / full * mass } else { 0.0 }
    }
}

/// Which coefficient to estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Entry {
    /// `(L φ_α, φ_γ)*`.
    L { alpha: MultiIndex, gamma: MultiIndex },
    /// Symmetrized `(R[φ_α, φ_β], φ_γ)*`.
    R {
        alpha: MultiIndex,
        beta: MultiIndex,
        gamma: MultiIndex,
    },
}

impl Entry {
    fn parity_zero(&self) -> bool {
        match *self {
            Entry::L { alpha, gamma } => (0..3).any(|i| (alpha[i] + gamma[i]) % 2 == 1),
            Entry::R { alpha, beta, gamma } => (0..3).any(|i| (alpha[i] + beta[i] + gamma[i]) % 2 == 1),
        }
    }

    fn stream(&self) -> u64 {
        let pack = |a: MultiIndex| ((a[0] as u64) << 16) | ((a[1] as u64) << 8) | a[2] as u64;
        match *self {
            Entry::L { alpha, gamma } => (1 << 60) | (pack(alpha) << 24) | pack(gamma),
            Entry::R { alpha, beta, gamma } => (2 << 60) | (pack(alpha) << 40) | (pack(beta) << 20) | pack(gamma),
        }
    }

    fn max_degree(&self) -> usize {
        let d = |a: MultiIndex| a.iter().map(|&x| x as usize).max().unwrap_or(0);
        match *self {
            Entry::L { alpha, gamma } => d(alpha).max(d(gamma)),
            Entry::R { alpha, beta, gamma } => d(alpha).max(d(beta)).max(d(gamma)),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleEstimate {
    pub entry: Entry,
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Set when the parity pre-check proves the coefficient vanishes.
    pub exact_zero: bool,
}

impl OracleEstimate {
    /// `|estimate − exact|` in standard errors (floored at [`STD_ERROR_FLOOR`]).
    pub fn deviation(&self, exact: f64) -> f64 {
        if self.exact_zero {
            return if exact == 0.0 { 0.0 } else { f64::INFINITY };
        }
        (self.estimate - exact).abs() / self.std_error.max(STD_ERROR_FLOOR)
    }
}

fn phi(h: &[Vec<f64>; 3], a: MultiIndex) -> f64 {
    h[0][a[0] as usize] * h[1][a[1] as usize] * h[2][a[2] as usize]
}

fn tables(x: [f64; 3], n: usize) -> [Vec<f64>; 3] {
    [hermite_values(x[0], n), hermite_values(x[1], n), hermite_values(x[2], n)]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Unit ω with `û·ω = t` and azimuth `phi`.
fn omega_around(u: [f64; 3], t: f64, azimuth: f64) -> [f64; 3] {
    let helper = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(helper, u);
    let mut e1 = [helper[0] - d * u[0], helper[1] - d * u[1], helper[2] - d * u[2]];
    let n1 = dot(e1, e1).sqrt();
    e1 = e1.map(|x| x / n1);
    let e2 = [
        u[1] * e1[2] - u[2] * e1[1],
        u[2] * e1[0] - u[0] * e1[2],
        u[0] * e1[1] - u[1] * e1[0],
    ];
    let s = (1.0 - t * t).max(0.0).sqrt();
    let (c, sn) = (azimuth.cos(), azimuth.sin());
    [0, 1, 2].map(|i| t * u[i] + s * (c * e1[i] + sn * e2[i]))
}

/// Estimates one entry with `n_samples` draws.
pub fn mc_oracle(
    sampler: &PolarSampler,
    entry: Entry,
    n_samples: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "oracle needs at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    if entry.parity_zero() {
        return Ok(OracleEstimate {
            entry,
            estimate: 0.0,
            std_error: 0.0,
            samples: 0,
            exact_zero: true,
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(entry.stream());
    let n = entry.max_degree();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..n_samples {
        let v: [f64; 3] = [0, 1, 2].map(|_| rng.sample(StandardNormal));
        let w: [f64; 3] = [0, 1, 2].map(|_| rng.sample(StandardNormal));
        let t = sampler.sample_t(rng.random::<f64>());
        let az = rng.random::<f64>() * std::f64::consts::TAU;
        let rel = [w[0] - v[0], w[1] - v[1], w[2] - v[2]];
        let r = dot(rel, rel).sqrt();
        let u = rel.map(|x| x / r);
        let om = omega_around(u, t, az);
        let kick = dot(rel, om);
        let vs = [0, 1, 2].map(|i| v[i] + kick * om[i]);
        let ws = [0, 1, 2].map(|i| w[i] - kick * om[i]);
        let (hv, hw, hvs, hws) = (tables(v, n), tables(w, n), tables(vs, n), tables(ws, n));
        let x = match entry {
            Entry::L { alpha, gamma } => {
                phi(&hv, gamma) * (phi(&hvs, alpha) + phi(&hws, alpha) - phi(&hv, alpha) - phi(&hw, alpha))
            }
            Entry::R { alpha, beta, gamma } => {
                let post = phi(&hvs, alpha) * phi(&hws, beta) + phi(&hvs, beta) * phi(&hws, alpha);
                let pre = phi(&hv, alpha) * phi(&hw, beta) + phi(&hv, beta) * phi(&hw, alpha);
                0.5 * phi(&hv, gamma) * (post - pre)
            }
        };
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let var = m2 / (n_samples - 1) as f64;
    Ok(OracleEstimate {
        entry,
        estimate: mean,
        std_error: (var / n_samples as f64).sqrt(),
        samples: n_samples,
        exact_zero: false,
    })
}

/// Estimates many entries in parallel; results are in input order and do not
/// depend on the thread count.
pub fn mc_oracle_batch(
    kernel: &CollisionKernel,
    entries: &[Entry],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<OracleEstimate>> {
    let sampler = PolarSampler::new(kernel);
    entries
        .par_iter()
        .map(|e| mc_oracle(&sampler, *e, n_samples, seed))
        .collect()
}

/// Draws `n_l` entries of `L` and `n_r` entries of `R` at random among the
/// degree-compatible index tuples of `basis` (parity-zero ones included).
pub fn random_entries(basis: &HermiteBasis, n_l: usize, n_r: usize, seed: u64) -> Vec<Entry> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let idx = basis.indices();
    let deg = |a: MultiIndex| a.iter().map(|&x| x as usize).sum::<usize>();
    let pick = |rng: &mut rand_chacha::ChaCha8Rng| idx[rng.random_range(0..idx.len())];
    let mut out = Vec::with_capacity(n_l + n_r);
    while out.len() < n_l {
        let (a, g) = (pick(&mut rng), pick(&mut rng));
        if deg(a) == deg(g) {
            out.push(Entry::L { alpha: a, gamma: g });
        }
    }
    while out.len() < n_l + n_r {
        let (a, b, g) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        if deg(a) + deg(b) == deg(g) {
            out.push(Entry::R { alpha: a, beta: b, gamma: g });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::HermiteBasis;
    use crate::operators::{assemble_l, assemble_r};

    #[test]
    fn sampler_inverts_cdf() {
        for name in ["linear", "quintic"] {
            let k = CollisionKernel::builtin(name).unwrap();
            let s = PolarSampler::new(&k);
            for i in 1..200 {
                let u = i as f64 / 200.0;
                let t = s.sample_t(u);
                assert!((s.cdf_at(t) - u).abs() < 1e-10, "{name} u={u}");
            }
            // linear kernel: F(t) = (1 + t|t|)/2
            if name == "linear" {
                for t in [-0.7, -0.1, 0.3, 0.9] {
                    assert!((s.cdf_at(t) - 0.5 * (1.0 + t * f64::abs(t))).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn trivial_entries_vanish() {
        let k = CollisionKernel::builtin("linear").unwrap();
        let s = PolarSampler::new(&k);
        let z = [0, 0, 0];
        let e = mc_oracle(&s, Entry::L { alpha: z, gamma: z }, 20_000, 1).unwrap();
        assert!(e.estimate.abs() < 1e-12);
        let e = mc_oracle(&s, Entry::R { alpha: z, beta: z, gamma: [2, 0, 0] }, 20_000, 1).unwrap();
        assert!(e.estimate.abs() < 1e-12);
        let p = mc_oracle(&s, Entry::L { alpha: [1, 0, 0], gamma: [2, 0, 0] }, 20_000, 1).unwrap();
        assert!(p.exact_zero && p.estimate == 0.0);
        assert!(mc_oracle(&s, Entry::L { alpha: z, gamma: z }, 10, 1).is_err());
    }

    #[test]
    fn oracle_agrees_with_assembly_on_a_few_entries() {
        let k = CollisionKernel::builtin("quintic").unwrap();
        let b = HermiteBasis::new(3).unwrap();
        let l = assemble_l(&k, &b).unwrap();
        let r = assemble_r(&k, &b).unwrap();
        let pos = |a| b.position(a).unwrap();
        let entries = [
            Entry::L { alpha: [2, 0, 0], gamma: [2, 0, 0] },
            Entry::L { alpha: [1, 1, 0], gamma: [1, 1, 0] },
            Entry::L { alpha: [3, 0, 0], gamma: [1, 2, 0] },
            Entry::R { alpha: [1, 0, 0], beta: [1, 0, 0], gamma: [2, 0, 0] },
            Entry::R { alpha: [1, 0, 0], beta: [0, 1, 0], gamma: [1, 1, 0] },
        ];
        let est = mc_oracle_batch(&k, &entries, 200_000, 11).unwrap();
        for e in est {
            let exact = match e.entry {
                Entry::L { alpha, gamma } => l.matrix()[(pos(gamma), pos(alpha))],
                Entry::R { alpha, beta, gamma } => r.get(pos(alpha), pos(beta), pos(gamma)),
            };
            assert!((e.estimate - exact).abs() <= 5.0 * e.std_error + 1e-12, "{e:?} vs {exact}");
        }
        let again = mc_oracle_batch(&k, &entries[..1], 20_000, 11).unwrap();
        let once = mc_oracle(&PolarSampler::new(&k), entries[0], 20_000, 11).unwrap();
        assert_eq!(again[0].estimate, once.estimate);
    }
}
