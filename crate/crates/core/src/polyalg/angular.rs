//! Rotation-equivariant averaging of ω-monomials against a kernel b(û·ω).
//!
//! For `|β| = j`, `∫ ω^β b(û·ω) u(dω)` is obtained from the contraction
//! `∫ (a·ω)^j b(û·ω) u(dω)` with a free vector `a`: in a frame aligned with û
//! the azimuthal average is a Wallis ratio and the polar integral is a finite
//! combination of kernel moments, so
//!
//! ```text
//! ∫ (a·ω)^j b = Σ_{k even} C(j,k) (k-1)!!/k!! J_{j,k} (a·û)^{j-k} (|a|² - (a·û)²)^{k/2}
//! J_{j,k} = Σ_i C(k/2, i) (-1)^i mu_{j-k+2i}
//! ```
//!
//! and the entry for β is `β!/j!` times the coefficient of `a^β`.

use std::collections::BTreeMap;

use super::{MultiPoly, double_factorial};
use crate::error::{Error, Result};
use crate::kernel::MomentTable;

const UA: [&str; 6] = ["u1", "u2", "u3", "a1", "a2", "a3"];
const U: [&str; 3] = ["u1", "u2", "u3"];

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Kernel-independent table: each entry is a list of `(m, P_m(û))` with
/// `∫ ω^β b(û·ω) u(dω) = Σ_m mu_m P_m(û)` for unit û.
#[derive(Clone, Debug)]
pub struct AngularTable {
    k_max: usize,
    entries: BTreeMap<[u8; 3], Vec<(usize, MultiPoly)>>,
}

impl AngularTable {
    pub fn new(k_max: usize) -> Self {
        let mut entries = BTreeMap::new();
        let dot = |a: usize, b: usize| {
            let mut p = MultiPoly::zero(&UA);
            for i in 0..3 {
                p = p.add(&MultiPoly::var(&UA, a + i).mul(&MultiPoly::var(&UA, b + i)));
            }
            p
        };
        let au = dot(0, 3);
        let perp = dot(3, 3).sub(&au.pow(2));
        for j in 0..=k_max as u32 {
            let mut by_m: BTreeMap<usize, MultiPoly> = BTreeMap::new();
            for k in (0..=j).step_by(2) {
                let wallis = double_factorial(k as i64 - 1) / double_factorial(k as i64);
                let shape = au.pow((j - k) as usize).mul(&perp.pow((k / 2) as usize));
                for i in 0..=k / 2 {
                    let c = binomial(j, k) * wallis * binomial(k / 2, i) * if i % 2 == 0 { 1.0 } else { -1.0 };
                    let m = (j - k + 2 * i) as usize;
                    let slot = by_m.entry(m).or_insert_with(|| MultiPoly::zero(&UA));
                    *slot = slot.add(&shape.scale(c));
                }
            }
            // split by a-exponent
            for (m, poly) in by_m {
                for (e, c) in poly.terms() {
                    let beta = [e[3], e[4], e[5]];
                    let scale = beta.iter().map(|&b| factorial(b as u32)).product::<f64>() / factorial(j);
                    let list: &mut Vec<(usize, MultiPoly)> = entries.entry(beta).or_default();
                    let pos = match list.iter().position(|(mm, _)| *mm == m) {
                        Some(p) => p,
                        None => {
                            list.push((m, MultiPoly::zero(&U)));
                            list.len() - 1
                        }
                    };
                    let mono = MultiPoly::monomial(&U, vec![e[0], e[1], e[2]], c * scale);
                    list[pos].1 = list[pos].1.add(&mono);
                }
            }
        }
        Self { k_max, entries }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Symbolic entry for `ω^β` as `(m, P_m)` pairs.
    pub fn symbolic(&self, beta: [u8; 3]) -> Option<&[(usize, MultiPoly)]> {
        self.entries.get(&beta).map(|v| v.as_slice())
    }

    /// Entry for `ω^β` with the kernel's moments substituted: a polynomial in û.
    pub fn entry(&self, beta: [u8; 3], moments: &MomentTable) -> Result<MultiPoly> {
        let j: usize = beta.iter().map(|&b| b as usize).sum();
        if j > self.k_max {
            return Err(Error::AngularTableTooSmall {
                needed: j,
                available: self.k_max,
            });
        }
        let mut out = MultiPoly::zero(&U);
        for (m, p) in self.entries.get(&beta).map(|v| v.as_slice()).unwrap_or(&[]) {
            if *m > moments.m_max() {
                return Err(Error::AngularTableTooSmall {
                    needed: *m,
                    available: moments.m_max(),
                });
            }
            out = out.add(&p.scale(moments.get(*m)));
        }
        Ok(out)
    }

    /// Binds all entries to one kernel.
    pub fn bind(&self, moments: &MomentTable) -> Result<BTreeMap<[u8; 3], MultiPoly>> {
        self.entries
            .keys()
            .map(|b| Ok((*b, self.entry(*b, moments)?)))
            .collect()
    }
}

/// Replaces every ω-monomial of `p` (variables at `omega`) by its average
/// against `b(û·ω)`; the ω slots are renamed `u1, u2, u3`.
pub fn angular_average(
    p: &MultiPoly,
    omega: [usize; 3],
    table: &AngularTable,
    moments: &MomentTable,
) -> Result<MultiPoly> {
    let need = p.degree_in(&omega);
    if need > table.k_max() {
        return Err(Error::AngularTableTooSmall {
            needed: need,
            available: table.k_max(),
        });
    }
    let mut names: Vec<String> = p.vars().to_vec();
    for (slot, u) in omega.iter().zip(U) {
        names[*slot] = u.to_string();
    }
    let mut cache: BTreeMap<[u8; 3], MultiPoly> = BTreeMap::new();
    let mut out = MultiPoly::zero(&names);
    for (e, c) in p.terms() {
        let beta = [e[omega[0]], e[omega[1]], e[omega[2]]];
        if !cache.contains_key(&beta) {
            cache.insert(beta, table.entry(beta, moments)?);
        }
        let entry = &cache[&beta];
        for (ue, uc) in entry.terms() {
            let mut ne = e.clone();
            for (k, slot) in omega.iter().enumerate() {
                ne[*slot] = ue[k];
            }
            out.add_term(ne, c * uc);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::CollisionKernel;
    use crate::quadrature::GaussLegendre;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Sphere quadrature in a frame aligned with û: Gauss–Legendre in the polar
    /// cosine on each half (the kernel kink sits at the split) and a trapezoid
    /// rule in azimuth.
    pub(crate) fn sphere_quadrature(kernel: &CollisionKernel, u: [f64; 3], f: &dyn Fn([f64; 3]) -> f64) -> f64 {
        let (e1, e2) = frame(u);
        let gl = GaussLegendre::new(40);
        let n_phi = 64;
        let polar = |x: f64| {
            let s = (1.0 - x * x).max(0.0).sqrt();
            let mut acc = 0.0;
            for k in 0..n_phi {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / n_phi as f64;
                let (sp, cp) = phi.sin_cos();
                let w = [0, 1, 2].map(|i| x * u[i] + s * (cp * e1[i] + sp * e2[i]));
                acc += f(w);
            }
            kernel.evaluate(x) * acc / n_phi as f64
        };
        0.5 * (gl.integrate(&polar, -1.0, 0.0) + gl.integrate(&polar, 0.0, 1.0))
    }

    fn frame(u: [f64; 3]) -> ([f64; 3], [f64; 3]) {
        let a = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let d = a[0] * u[0] + a[1] * u[1] + a[2] * u[2];
        let mut e1 = [a[0] - d * u[0], a[1] - d * u[1], a[2] - d * u[2]];
        let n = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
        e1 = e1.map(|x| x / n);
        let e2 = [
            u[1] * e1[2] - u[2] * e1[1],
            u[2] * e1[0] - u[0] * e1[2],
            u[0] * e1[1] - u[1] * e1[0],
        ];
        (e1, e2)
    }

    fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
        loop {
            let v = [0, 1, 2].map(|_| rng.random_range(-1.0..1.0));
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.1 && n < 1.0 {
                return v.map(|x| x / n);
            }
        }
    }

    #[test]
    fn second_order_entry_for_linear_kernel() {
        let k = CollisionKernel::builtin("linear").unwrap();
        let t = AngularTable::new(2);
        let one = t.entry([0, 0, 0], k.moments()).unwrap();
        assert!((one.coefficient(&[0, 0, 0]) - 1.0).abs() < 1e-13);
        // ω1² → α + β û1², α = β = 1/4 (plus zero off-diagonal terms)
        let e = t.entry([2, 0, 0], k.moments()).unwrap().prune(1e-14);
        assert!((e.coefficient(&[0, 0, 0]) - 0.25).abs() < 1e-13);
        assert!((e.coefficient(&[2, 0, 0]) - 0.25).abs() < 1e-13);
        // ω1ω2 → β û1û2
        let e = t.entry([1, 1, 0], k.moments()).unwrap().prune(1e-14);
        assert!((e.coefficient(&[1, 1, 0]) - 0.25).abs() < 1e-13);
        assert_eq!(e.len(), 1);
        let odd = t.entry([1, 0, 0], k.moments()).unwrap();
        assert!(odd.max_abs_coefficient() < 1e-13);
    }

    #[test]
    fn table_too_small() {
        let k = CollisionKernel::builtin("linear").unwrap();
        let t = AngularTable::new(2);
        assert!(matches!(
            t.entry([3, 0, 0], k.moments()),
            Err(Error::AngularTableTooSmall { .. })
        ));
    }

    #[test]
    fn entries_match_sphere_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in ["linear", "quintic"] {
            let k = CollisionKernel::builtin(spec).unwrap();
            let table = AngularTable::new(8);
            let bound = table.bind(k.moments()).unwrap();
            for _ in 0..20 {
                let u = random_unit(&mut rng);
                for (beta, poly) in &bound {
                    let deg: u8 = beta.iter().sum();
                    assert!(poly.degree() <= deg as usize);
                    let exact = poly.evaluate(&u);
                    let quad = sphere_quadrature(&k, u, &|w| {
                        w[0].powi(beta[0] as i32) * w[1].powi(beta[1] as i32) * w[2].powi(beta[2] as i32)
                    });
                    assert!((exact - quad).abs() < 1e-8, "{spec} {beta:?}: {exact} vs {quad}");
                    if deg % 2 == 1 {
                        assert!(poly.max_abs_coefficient() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_order_average_is_one_at_random_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in ["linear", "quintic"] {
            let k = CollisionKernel::builtin(spec).unwrap();
            for _ in 0..5 {
                let u = random_unit(&mut rng);
                let q = sphere_quadrature(&k, u, &|_| 1.0);
                assert!((q - 1.0).abs() < 1e-12);
            }
        }
    }
}
