//! Sparse multivariate polynomials with exact substitution and the Gaussian,
//! spherical and angular integration rules used by operator assembly.

mod angular;
mod moments;

pub use angular::{angular_average, AngularTable};
pub(crate) use angular::{binomial, factorial};
pub use moments::{double_factorial, gaussian_moment, radial_moment, sphere_average};

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};

pub type Exponent = Vec<u8>;

/// Sparse polynomial over a named, ordered variable set.
///
/// Terms are kept in a `BTreeMap` keyed by exponent tuples, so iteration and
/// serialization order are canonical. Exact zeros are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly {
    vars: Vec<String>,
    terms: BTreeMap<Exponent, f64>,
}

impl MultiPoly {
    pub fn zero<S: AsRef<str>>(vars: &[S]) -> Self {
        Self {
            vars: vars.iter().map(|s| s.as_ref().to_string()).collect(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant<S: AsRef<str>>(vars: &[S], c: f64) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(vec![0; vars.len()], c);
        p
    }

    /// The polynomial `x_i`.
    pub fn var<S: AsRef<str>>(vars: &[S], i: usize) -> Self {
        let mut e = vec![0; vars.len()];
        e[i] = 1;
        Self::monomial(vars, e, 1.0)
    }

    pub fn monomial<S: AsRef<str>>(vars: &[S], exp: Exponent, c: f64) -> Self {
        assert_eq!(exp.len(), vars.len());
        let mut p = Self::zero(vars);
        p.add_term(exp, c);
        p
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// Largest total degree in the given subset of variables.
    pub fn degree_in(&self, idx: &[usize]) -> usize {
        self.terms
            .keys()
            .map(|e| idx.iter().map(|&i| e[i] as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn coefficient(&self, exp: &[u8]) -> f64 {
        self.terms.get(exp).copied().unwrap_or(0.0)
    }

    pub fn add_term(&mut self, exp: Exponent, c: f64) {
        debug_assert_eq!(exp.len(), self.vars.len());
        if c == 0.0 {
            return;
        }
        match self.terms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn same_vars(&self, other: &Self) {
        assert_eq!(self.vars, other.vars, "polynomials over different variable sets");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.same_vars(other);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(&self.vars);
        if s != 0.0 {
            for (e, c) in &self.terms {
                out.add_term(e.clone(), c * s);
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.same_vars(other);
        let mut out = Self::zero(&self.vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut out = Self::constant(&self.vars, 1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.vars.len());
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(x)
                    .map(|(&k, &xi)| xi.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Re-expresses the polynomial over a larger variable set containing all
    /// current variables (by name).
    pub fn embed<S: AsRef<str>>(&self, vars: &[S]) -> Self {
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| {
                vars.iter()
                    .position(|w| w.as_ref() == v)
                    .unwrap_or_else(|| panic!("variable {v} missing from target set"))
            })
            .collect();
        let mut out = Self::zero(vars);
        for (e, c) in &self.terms {
            let mut ne = vec![0u8; vars.len()];
            for (i, &k) in e.iter().enumerate() {
                ne[map[i]] = k;
            }
            out.add_term(ne, *c);
        }
        out
    }

    /// Renames variables in place (same positions).
    pub fn rename<S: AsRef<str>>(mut self, vars: &[S]) -> Self {
        assert_eq!(vars.len(), self.vars.len());
        self.vars = vars.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    /// Exact substitution of every variable by a polynomial over `target`.
    ///
    /// `images[i]` is the image of variable `i`; all images must share the
    /// target variable set. The substitutions used for collision maps are
    /// linear in the velocity variables, with ω entering as a parameter.
    pub fn compose_linear(&self, map: &Substitution) -> Result<Self> {
        if map.images.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                got: map.images.len(),
            });
        }
        let mut out = Self::zero(&map.target);
        // cache powers of each image
        let mut powers: Vec<Vec<MultiPoly>> = vec![Vec::new(); self.vars.len()];
        for e in self.terms.keys() {
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let img = map.images[i]
                    .as_ref()
                    .ok_or_else(|| Error::IncompleteSubstitution(self.vars[i].clone()))?;
                let cache = &mut powers[i];
                if cache.is_empty() {
                    cache.push(Self::constant(&map.target, 1.0));
                }
                while cache.len() <= k as usize {
                    let next = cache.last().unwrap().mul(img);
                    cache.push(next);
                }
            }
        }
        for (e, c) in &self.terms {
            let mut acc = Self::constant(&map.target, *c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    acc = acc.mul(&powers[i][k as usize]);
                }
            }
            for (te, tc) in acc.terms {
                out.add_term(te, tc);
            }
        }
        Ok(out)
    }

    /// Canonicalizes on the unit sphere: reduces the exponent of `omega[2]`
    /// below 2 via `ω₃² = 1 − ω₁² − ω₂²`.
    pub fn reduce_omega_norm(&self, omega: [usize; 3]) -> Self {
        let mut out = Self::zero(&self.vars);
        let mut work: Vec<(Exponent, f64)> = self.terms.iter().map(|(e, c)| (e.clone(), *c)).collect();
        while let Some((e, c)) = work.pop() {
            if e[omega[2]] < 2 {
                out.add_term(e, c);
                continue;
            }
            let mut base = e.clone();
            base[omega[2]] -= 2;
            work.push((base.clone(), c));
            let mut e1 = base.clone();
            e1[omega[0]] += 2;
            work.push((e1, -c));
            let mut e2 = base;
            e2[omega[1]] += 2;
            work.push((e2, -c));
        }
        out
    }

    /// Integrates out the listed variables against independent standard
    /// Gaussian weights; the result lives on the remaining variables.
    pub fn gaussian_integrate(&self, idx: &[usize]) -> Self {
        let keep: Vec<usize> = (0..self.vars.len()).filter(|i| !idx.contains(i)).collect();
        let names: Vec<&str> = keep.iter().map(|&i| self.vars[i].as_str()).collect();
        let mut out = Self::zero(&names);
        for (e, c) in &self.terms {
            let mut w = *c;
            for &i in idx {
                w *= gaussian_moment(e[i] as u32);
                if w == 0.0 {
                    break;
                }
            }
            if w != 0.0 {
                out.add_term(keep.iter().map(|&i| e[i]).collect(), w);
            }
        }
        out
    }

    /// Deterministic text form: one `(e1,e2,...): coefficient` line per term,
    /// sorted by exponent tuple, coefficients at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# vars: {}", self.vars.join(",")).unwrap();
        for (e, c) in &self.terms {
            let tup: Vec<String> = e.iter().map(|k| k.to_string()).collect();
            writeln!(s, "({}): {}", tup.join(","), crate::io::fmt17(*c)).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix("# vars: "))
            .ok_or_else(|| Error::InvalidArgument("missing vars header".into()))?;
        let vars: Vec<&str> = if header.is_empty() { vec![] } else { header.split(',').collect() };
        let mut p = Self::zero(&vars);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let bad = || Error::InvalidArgument(format!("bad term line '{line}'"));
            let (lhs, rhs) = line.split_once("):").ok_or_else(bad)?;
            let lhs = lhs.strip_prefix('(').ok_or_else(bad)?;
            let exp: Exponent = if lhs.is_empty() {
                vec![]
            } else {
                lhs.split(',').map(|k| k.parse::<u8>().map_err(|_| bad())).collect::<Result<_>>()?
            };
            if exp.len() != vars.len() {
                return Err(bad());
            }
            let c: f64 = rhs.trim().parse().map_err(|_| bad())?;
            p.add_term(exp, c);
        }
        Ok(p)
    }

    /// Drops terms with `|c| <= eps`.
    pub fn prune(&self, eps: f64) -> Self {
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            if c.abs() > eps {
                out.add_term(e.clone(), *c);
            }
        }
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Images of each source variable as polynomials over a target variable set.
#[derive(Clone, Debug)]
pub struct Substitution {
    target: Vec<String>,
    images: Vec<Option<MultiPoly>>,
}

impl Substitution {
    pub fn new<S: AsRef<str>>(target: &[S], n_source: usize) -> Self {
        Self {
            target: target.iter().map(|s| s.as_ref().to_string()).collect(),
            images: vec![None; n_source],
        }
    }

    pub fn set(&mut self, source: usize, image: MultiPoly) {
        assert_eq!(image.vars(), self.target.as_slice());
        self.images[source] = Some(image);
    }

    pub fn target(&self) -> &[String] {
        &self.target
    }
}

/// Variable names used throughout assembly.
pub mod names {
    pub const V: [&str; 3] = ["v1", "v2", "v3"];
    pub const VWO: [&str; 9] = ["v1", "v2", "v3", "w1", "w2", "w3", "o1", "o2", "o3"];
    pub const XEO: [&str; 9] = ["x1", "x2", "x3", "e1", "e2", "e3", "o1", "o2", "o3"];
    pub const EU: [&str; 6] = ["e1", "e2", "e3", "u1", "u2", "u3"];
}

/// Post-collisional substitution (v, w) ↦ (v*, w*) over (v, w, ω):
/// `v* = v + ((w − v)·ω) ω`, `w* = w − ((w − v)·ω) ω`.
pub fn collision_map() -> Substitution {
    let vars = &names::VWO;
    let x = |i: usize| MultiPoly::var(vars, i);
    // (w - v)·ω
    let mut proj = MultiPoly::zero(vars);
    for j in 0..3 {
        proj = proj.add(&x(3 + j).sub(&x(j)).mul(&x(6 + j)));
    }
    let mut map = Substitution::new(vars, 9);
    for i in 0..3 {
        let kick = proj.mul(&x(6 + i));
        map.set(i, x(i).add(&kick));
        map.set(3 + i, x(3 + i).sub(&kick));
        map.set(6 + i, x(6 + i));
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vw() -> Vec<&'static str> {
        names::VWO.to_vec()
    }

    #[test]
    fn post_collision_first_component() {
        let vars = vw();
        let p = MultiPoly::var(&vars, 0);
        let q = p.compose_linear(&collision_map()).unwrap();
        let x = |i| MultiPoly::var(&vars, i);
        let mut expect = x(0);
        for j in 0..3 {
            expect = expect.add(&x(3 + j).sub(&x(j)).mul(&x(6 + j)).mul(&x(6)));
        }
        assert_eq!(q, expect);
    }

    #[test]
    fn energy_conserved_after_sphere_reduction() {
        let vars = vw();
        let mut energy = MultiPoly::zero(&vars);
        for i in 0..6 {
            energy = energy.add(&MultiPoly::var(&vars, i).pow(2));
        }
        let post = energy.compose_linear(&collision_map()).unwrap();
        let reduced = post.reduce_omega_norm([6, 7, 8]).prune(1e-14);
        assert_eq!(reduced, energy);
        let one = MultiPoly::constant(&vars, 1.0);
        assert_eq!(one.compose_linear(&collision_map()).unwrap(), one);
    }

    #[test]
    fn incomplete_substitution() {
        let p = MultiPoly::var(&["a", "b"], 1);
        let mut s = Substitution::new(&["a", "b"], 2);
        s.set(0, MultiPoly::var(&["a", "b"], 0));
        assert!(matches!(p.compose_linear(&s), Err(Error::IncompleteSubstitution(v)) if v == "b"));
    }

    #[test]
    fn omega_reduction_examples() {
        let o = ["o1", "o2", "o3"];
        let sq = |i| MultiPoly::var(&o, i).pow(2);
        let norm = sq(0).add(&sq(1)).add(&sq(2));
        assert_eq!(norm.reduce_omega_norm([0, 1, 2]), MultiPoly::constant(&o, 1.0));
        let w34 = MultiPoly::var(&o, 2).pow(4).reduce_omega_norm([0, 1, 2]);
        let expect = MultiPoly::constant(&o, 1.0).sub(&sq(0)).sub(&sq(1)).pow(2);
        assert_eq!(w34, expect);
        let vars = ["v1", "o1", "o2", "o3"];
        let v = MultiPoly::var(&vars, 0);
        let o2 = |i| MultiPoly::var(&vars, i).pow(2);
        let p = v.mul(&o2(3)).add(&v.mul(&o2(1)));
        assert_eq!(p.reduce_omega_norm([1, 2, 3]), v.sub(&v.mul(&o2(2))));
    }

    #[test]
    fn gaussian_integration_examples() {
        let xy = ["x", "y"];
        assert_eq!(
            MultiPoly::var(&xy, 0).pow(4).gaussian_integrate(&[0]),
            MultiPoly::constant(&["y"], 3.0)
        );
        let p = MultiPoly::monomial(&xy, vec![2, 3], 1.0).gaussian_integrate(&[0]);
        assert_eq!(p, MultiPoly::var(&["y"], 0).pow(3));
        assert_eq!(
            MultiPoly::var(&xy, 0).pow(6).gaussian_integrate(&[0, 1]).coefficient(&[]),
            15.0
        );
    }

    #[test]
    fn text_round_trip() {
        let p = collision_map().images[0].clone().unwrap().scale(1.0 / 3.0);
        let q = MultiPoly::from_text(&p.to_text()).unwrap();
        assert_eq!(p, q);
    }

    fn random_poly(coeffs: &[f64]) -> MultiPoly {
        // degree-3 polynomial in 6 variables built from a flat coefficient list
        let vars = ["v1", "v2", "v3", "w1", "w2", "w3"];
        let mut p = MultiPoly::zero(&vars);
        let mut k = 0;
        for i in 0..6 {
            for j in i..6 {
                for l in j..6 {
                    let mut e = vec![0u8; 6];
                    e[i] += 1;
                    e[j] += 1;
                    e[l] += 1;
                    p.add_term(e, coeffs[k % coeffs.len()]);
                    k += 1;
                }
                let mut e = vec![0u8; 6];
                e[i] += 1;
                e[j] += 1;
                p.add_term(e, coeffs[(k * 7) % coeffs.len()]);
                k += 1;
            }
        }
        p
    }

    fn orthogonal(angles: &[f64]) -> [[f64; 6]; 6] {
        // product of Givens rotations
        let mut q = [[0.0; 6]; 6];
        for (i, row) in q.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let mut a = 0;
        for i in 0..6 {
            for j in (i + 1)..6 {
                let (s, c) = angles[a % angles.len()].sin_cos();
                a += 1;
                for row in q.iter_mut() {
                    let (x, y) = (row[i], row[j]);
                    row[i] = c * x - s * y;
                    row[j] = s * x + c * y;
                }
            }
        }
        q
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn gaussian_integral_invariant_under_orthogonal_maps(
            coeffs in proptest::collection::vec(-1.0f64..1.0, 20),
            angles in proptest::collection::vec(-3.0f64..3.0, 15),
        ) {
            let p = random_poly(&coeffs);
            let vars = p.vars().to_vec();
            let q = orthogonal(&angles);
            let mut map = Substitution::new(&vars, 6);
            for i in 0..6 {
                let mut img = MultiPoly::zero(&vars);
                for j in 0..6 {
                    img = img.add(&MultiPoly::var(&vars, j).scale(q[i][j]));
                }
                map.set(i, img);
            }
            let all: Vec<usize> = (0..6).collect();
            let before = p.gaussian_integrate(&all).coefficient(&[]);
            let after = p.compose_linear(&map).unwrap().gaussian_integrate(&all).coefficient(&[]);
            prop_assert!((before - after).abs() < 1e-12 * (1.0 + before.abs()));
        }
    }
}
