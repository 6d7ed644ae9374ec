//! Complex roots with a posteriori certification.
//!
//! Approximations come from the Aberth–Ehrlich iteration in double
//! precision. Each approximation `z_i` is then wrapped in the disk of
//! radius `d |W_i|`, where `W_i` is the Weierstrass correction; when those
//! disks are pairwise disjoint every disk holds exactly one root. Repeated
//! roots are handled by splitting off the square-free factors first.

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::poly::IntPoly;
use super::realroots::{cauchy_bound, isolate_real_roots};
use crate::error::{LabError, Result};

const UNIT_ROUNDOFF: f64 = f64::EPSILON * 0.5;

/// One root with its certified error radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    /// A true root lies within this distance of `(re, im)`.
    pub radius: f64,
    pub multiplicity: usize,
    /// Exact dyadic bracket for real roots.
    pub bracket: Option<(f64, f64)>,
}

impl Root {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_real(&self) -> bool {
        self.bracket.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    pub tolerance: f64,
}

impl RootSet {
    /// Number of roots counted with multiplicity.
    pub fn count(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn real(&self) -> impl Iterator<Item = &Root> {
        self.roots.iter().filter(|r| r.is_real())
    }

    /// Root values repeated according to multiplicity.
    pub fn values(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.count());
        for r in &self.roots {
            for _ in 0..r.multiplicity {
                out.push(r.value());
            }
        }
        out
    }
}

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::zero();
    let mut dv = Complex64::zero();
    for &a in c.iter().rev() {
        dv = dv * z + v;
        v = v * z + a;
    }
    (v, dv)
}

fn abs_sum(c: &[f64], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * r + a.abs())
}

fn initial_guesses(c: &[f64]) -> Vec<Complex64> {
    let d = c.len() - 1;
    // Geometric mean of root moduli from the end coefficients, capped by a
    // Fujiwara-type bound; used as the radius of the starting circle.
    let lead = c[d].abs();
    let low = c.iter().position(|&a| a != 0.0).unwrap_or(0);
    let mut r = if low < d {
        (c[low].abs() / lead).powf(1.0 / (d - low) as f64)
    } else {
        1.0
    };
    let fuji = (0..d)
        .map(|k| (c[k].abs() / lead).powf(1.0 / (d - k) as f64))
        .fold(0.0, f64::max)
        * 2.0;
    if !(r > 0.0) || r > fuji {
        r = fuji.max(1e-3);
    }
    (0..d)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / d as f64 + 0.4;
            Complex64::from_polar(r, theta)
        })
        .collect()
}

/// Aberth–Ehrlich iteration; returns approximations to all `d` roots.
pub fn aberth(c: &[f64], max_iter: usize) -> Vec<Complex64> {
    let d = c.len() - 1;
    if d == 1 {
        return vec![Complex64::new(-c[0] / c[1], 0.0)];
    }
    let mut z = initial_guesses(c);
    let mut done = vec![false; d];
    for _ in 0..max_iter {
        let mut all_done = true;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (v, dv) = horner(c, z[i]);
            if v.is_zero() {
                done[i] = true;
                continue;
            }
            let ratio = v / dv;
            let mut s = Complex64::zero();
            for j in 0..d {
                if j != i {
                    s += (z[i] - z[j]).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if !step.re.is_finite() || !step.im.is_finite() {
                let nudge = Complex64::new(1e-7, 1e-7) * (1.0 + z[i].norm());
                z[i] += nudge;
                all_done = false;
                continue;
            }
            z[i] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }
    z
}

/// Inclusion radii `d |W_i|` (with rounding error accounted for), or `None`
/// when two disks meet, so that isolation cannot be certified.
pub fn inclusion_radii(c: &[f64], z: &[Complex64]) -> Option<Vec<f64>> {
    let d = c.len() - 1;
    let lead = c[d].abs();
    let gamma = (4 * d + 4) as f64 * UNIT_ROUNDOFF;
    let mut radii = Vec::with_capacity(d);
    for i in 0..d {
        let (v, _) = horner(c, z[i]);
        let bound = v.norm() + gamma * abs_sum(c, z[i].norm());
        let mut denom = lead;
        for j in 0..d {
            if j != i {
                denom *= (z[i] - z[j]).norm();
            }
        }
        if !(denom > 0.0) {
            return None;
        }
        let w = bound / denom * (1.0 + gamma);
        let r = d as f64 * w;
        if !r.is_finite() {
            return None;
        }
        radii.push(r);
    }
    for i in 0..d {
        for j in i + 1..d {
            if (z[i] - z[j]).norm() <= radii[i] + radii[j] {
                return None;
            }
        }
    }
    Some(radii)
}

/// Certified roots of a square-free real polynomial given by exact double
/// coefficients. Near-real roots whose disk is its own conjugate are
/// snapped onto the real axis. `None` if certification fails or a radius
/// exceeds `tol`.
pub fn certified_roots_f64(c: &[f64], tol: f64) -> Option<Vec<(Complex64, f64)>> {
    let d = c.len() - 1;
    if d == 0 {
        return Some(Vec::new());
    }
    if d == 1 {
        let x = -c[0] / c[1];
        return Some(vec![(Complex64::new(x, 0.0), x.abs() * f64::EPSILON)]);
    }
    let z = aberth(c, 500);
    let radii = inclusion_radii(c, &z)?;
    if radii.iter().any(|&r| r > tol) {
        return None;
    }
    let mut out: Vec<(Complex64, f64)> = Vec::with_capacity(d);
    for (i, (&zi, &ri)) in z.iter().zip(&radii).enumerate() {
        // The conjugate root sits in the mirrored disk. If that disk meets
        // no other inclusion disk, the conjugate is this same root.
        let mirrored_alone = (0..d)
            .filter(|&j| j != i)
            .all(|j| (zi.conj() - z[j]).norm() > ri + radii[j]);
        if zi.im.abs() <= ri && mirrored_alone {
            out.push((Complex64::new(zi.re, 0.0), ri + zi.im.abs()));
        } else {
            out.push((zi, ri));
        }
    }
    Some(out)
}

fn exact_coeffs(p: &IntPoly) -> Vec<f64> {
    p.to_f64_exact().unwrap_or_else(|| p.to_f64_lossy())
}

/// All complex roots with multiplicity, certified within `tol`, without
/// exact real brackets.
pub fn complex_roots(p: &IntPoly, tol: f64) -> Result<Vec<Root>> {
    if p.is_zero() || p.degree() == 0 {
        return Err(LabError::Domain("roots of a constant polynomial".into()));
    }
    if p.to_f64_exact().is_some() {
        if let Some(rs) = certified_roots_f64(&exact_coeffs(p), tol) {
            return Ok(rs.into_iter().map(|(z, r)| simple_root(z, r)).collect());
        }
    }
    let mut out = Vec::new();
    for (factor, mult) in p.squarefree_decomposition() {
        if factor.degree() == 0 {
            continue;
        }
        let Some(c) = factor.to_f64_exact() else {
            return Err(LabError::Convergence(format!(
                "coefficients of {factor} exceed exact double range"
            )));
        };
        let rs = certified_roots_f64(&c, tol).ok_or_else(|| {
            LabError::Convergence(format!("could not certify roots of {factor} within {tol:e}"))
        })?;
        for (z, r) in rs {
            let mut root = simple_root(z, r);
            root.multiplicity = mult;
            out.push(root);
        }
    }
    Ok(out)
}

fn simple_root(z: Complex64, r: f64) -> Root {
    Root {
        re: z.re,
        im: z.im,
        radius: r,
        multiplicity: 1,
        bracket: None,
    }
}

/// All complex roots with multiplicity, each within `tol` of a true root;
/// real roots additionally carry exact dyadic brackets of width `<= tol`.
pub fn roots(p: &IntPoly, tol: f64) -> Result<RootSet> {
    if !(tol > 0.0) {
        return Err(LabError::Domain("root tolerance must be positive".into()));
    }
    let mut all = complex_roots(p, tol)?;
    let bound = cauchy_bound(p) + 1.0;
    let brackets = isolate_real_roots(p, -bound, bound, tol);
    let mut real_idx: Vec<usize> = (0..all.len()).filter(|&i| all[i].im == 0.0).collect();
    if real_idx.len() != brackets.len() {
        return Err(LabError::Convergence(format!(
            "real root count mismatch for {p}: {} certified disks vs {} Sturm brackets",
            real_idx.len(),
            brackets.len()
        )));
    }
    real_idx.sort_by(|&a, &b| all[a].re.partial_cmp(&all[b].re).unwrap());
    for (&i, &(lo, hi)) in real_idx.iter().zip(&brackets) {
        let mid = 0.5 * (lo + hi);
        all[i].re = mid;
        all[i].radius = (hi - lo) * 0.5 + mid.abs() * f64::EPSILON;
        all[i].bracket = Some((lo, hi));
    }
    Ok(RootSet {
        roots: all,
        tolerance: tol,
    })
}

/// Maximum modulus of the roots; handy for scaling grids in tests.
pub fn root_modulus_bound(p: &IntPoly) -> f64 {
    let lead = p.leading().and_then(|c| c.to_f64()).unwrap_or(1.0).abs();
    p.coeffs()
        .iter()
        .map(|c| c.to_f64().unwrap_or(f64::INFINITY).abs() / lead)
        .fold(1.0, f64::max)
        + 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unit_roots_of_x2_minus_1() {
        let rs = roots(&p(&[-1, 0, 1]), 1e-12).unwrap();
        assert_eq!(rs.count(), 2);
        let mut re: Vec<f64> = rs.real().map(|r| r.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(close(re[0], -1.0, 1e-12) && close(re[1], 1.0, 1e-12));
    }

    #[test]
    fn imaginary_pair() {
        let rs = roots(&p(&[1, 0, 1]), 1e-12).unwrap();
        assert_eq!(rs.real().count(), 0);
        let mut im: Vec<f64> = rs.roots.iter().map(|r| r.im).collect();
        im.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(close(im[0], -1.0, 1e-12) && close(im[1], 1.0, 1e-12));
    }

    #[test]
    fn cube_root_of_two() {
        let rs = roots(&p(&[-2, 0, 0, 1]), 1e-9).unwrap();
        let real: Vec<&Root> = rs.real().collect();
        assert_eq!(real.len(), 1);
        let (lo, hi) = real[0].bracket.unwrap();
        assert!(hi - lo <= 1e-9);
        assert!(lo * lo * lo <= 2.0 && hi * hi * hi >= 2.0);
        assert!(close(real[0].re, 2f64.cbrt(), 1e-9));
    }

    #[test]
    fn repeated_roots_go_through_squarefree_split() {
        // (X + 1)^4
        let rs = roots(&p(&[1, 4, 6, 4, 1]), 1e-9).unwrap();
        assert_eq!(rs.count(), 4);
        assert_eq!(rs.roots.len(), 1);
        assert_eq!(rs.roots[0].multiplicity, 4);
        assert!(close(rs.roots[0].re, -1.0, 1e-12));
    }

    #[test]
    fn count_equals_degree_on_a_box() {
        for a in -3..=3i64 {
            for b in -3..=3i64 {
                for c in 1..=3i64 {
                    for d in -3..=3i64 {
                        let f = p(&[d, b, a, c]);
                        let rs = roots(&f, 1e-9).unwrap();
                        assert_eq!(rs.count(), 3, "{f}");
                        for r in &rs.roots {
                            let v = f.eval_complex(r.value()).norm();
                            assert!(v < 1e-6 * (1.0 + r.value().norm().powi(3)), "{f}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn constant_is_rejected() {
        assert!(roots(&p(&[5]), 1e-9).is_err());
    }
}
