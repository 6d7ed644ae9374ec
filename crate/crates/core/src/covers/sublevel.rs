//! Sublevel sets `{x in [lo, hi] : |P(x)| <= eta, |P'(x)| >= kappa}`.
//!
//! Two engines produce outer approximations whose endpoints sit within a
//! certified bracket of the true boundary:
//!
//! * [`sublevel_exact`] works for any integer polynomial. Boundary points
//!   are isolated with Sturm sequences on the integer polynomials
//!   `2^k P - m` (levels are dyadic), and the predicate is decided by exact
//!   sign evaluation between them.
//! * [`PrefixKernel`] handles degree <= 3 with small coefficients. It fixes
//!   `a_1..a_3`, precomputes monotone pieces and the derivative mask (both
//!   independent of `a_0`) and then solves the level equations for each
//!   `a_0` with Newton steps whose results are certified by rounding-error
//!   bounded sign tests. Anything it cannot certify is reported back so
//!   the caller can fall through to the exact engine.

use std::cmp::Ordering;

use arrayvec::ArrayVec;

use crate::covers::interval::normalize;
use crate::polycore::realroots::{isolate_real_roots, shifted_integer_poly, sign_at};
use crate::polycore::IntPoly;

/// Default width of boundary brackets.
pub const BRACKET_WIDTH: f64 = 1e-13;

#[derive(Clone, Copy)]
enum Cond {
    Value,
    Slope,
}

/// Exact engine. `kappa = 0` drops the derivative condition.
pub fn sublevel_exact(p: &IntPoly, eta: f64, kappa: f64, lo: f64, hi: f64, width: f64) -> Vec<(f64, f64)> {
    assert!(lo <= hi && eta >= 0.0 && kappa >= 0.0);
    if p.is_zero() {
        return if kappa == 0.0 { vec![(lo, hi)] } else { Vec::new() };
    }
    let below = shifted_integer_poly(p, eta); // <= 0 wanted
    let above = shifted_integer_poly(p, -eta); // >= 0 wanted
    let dp = p.derivative();
    let slope = (kappa > 0.0).then(|| (shifted_integer_poly(&dp, kappa), shifted_integer_poly(&dp, -kappa)));

    let value_ok = |x: f64| {
        sign_at(below.coeffs(), x) != Ordering::Greater && sign_at(above.coeffs(), x) != Ordering::Less
    };
    let slope_ok = |x: f64| match &slope {
        None => true,
        Some((up, down)) => {
            sign_at(up.coeffs(), x) != Ordering::Less || sign_at(down.coeffs(), x) != Ordering::Greater
        }
    };

    let mut marks: Vec<(f64, f64, Cond)> = Vec::new();
    for f in [&below, &above] {
        if f.degree() > 0 {
            marks.extend(isolate_real_roots(f, lo, hi, width).into_iter().map(|(a, b)| (a, b, Cond::Value)));
        }
    }
    if let Some((up, down)) = &slope {
        for f in [up, down] {
            if f.degree() > 0 {
                marks.extend(isolate_real_roots(f, lo, hi, width).into_iter().map(|(a, b)| (a, b, Cond::Slope)));
            }
        }
    }
    marks.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());

    // Merge brackets into clusters.
    struct Cluster {
        a: f64,
        b: f64,
        value: bool,
        slope: bool,
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    for (a, b, cond) in marks {
        match clusters.last_mut() {
            Some(c) if a <= c.b => {
                c.b = c.b.max(b);
                match cond {
                    Cond::Value => c.value = true,
                    Cond::Slope => c.slope = true,
                }
            }
            _ => clusters.push(Cluster {
                a,
                b,
                value: matches!(cond, Cond::Value),
                slope: matches!(cond, Cond::Slope),
            }),
        }
    }

    // Cells are the open gaps between clusters; the predicate is constant
    // on each, so one exact test at the midpoint decides it.
    let mut edges = vec![lo];
    for c in &clusters {
        edges.push(c.a);
        edges.push(c.b);
    }
    edges.push(hi);
    let cells: Vec<Option<(bool, bool)>> = edges
        .chunks(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            (a < b).then(|| {
                let m = a + (b - a) * 0.5;
                (value_ok(m), slope_ok(m))
            })
        })
        .collect();

    let mut out = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        if let Some((v, s)) = cell {
            if *v && *s {
                out.push((edges[2 * i], edges[2 * i + 1]));
            }
        }
    }
    for (i, c) in clusters.iter().enumerate() {
        let neighbours = [cells[i], cells[i + 1]];
        let any_in = neighbours.iter().flatten().any(|&(v, s)| v && s);
        let value_possible = c.value || neighbours.iter().flatten().any(|&(v, _)| v);
        let slope_possible = c.slope || neighbours.iter().flatten().any(|&(_, s)| s);
        let lonely = neighbours.iter().all(|n| n.is_none());
        if any_in || lonely || (value_possible && slope_possible) {
            out.push((c.a.max(lo), c.b.min(hi)));
        }
    }
    normalize(out)
}

const U: f64 = f64::EPSILON * 0.5;

type Small = ArrayVec<(f64, f64), 12>;

/// In-place sort and merge of a handful of closed intervals.
fn merge_small(v: &mut Small) {
    v.retain(|&mut (a, b)| a <= b);
    v.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut w = 0;
    for r in 0..v.len() {
        if w > 0 && v[r].0 <= v[w - 1].1 {
            v[w - 1].1 = v[w - 1].1.max(v[r].1);
        } else {
            v[w] = v[r];
            w += 1;
        }
    }
    v.truncate(w);
}

/// `sum |c_k| |x|^k`.
#[inline]
fn abs_eval(c: &[f64], x: f64) -> f64 {
    let ax = x.abs();
    c.iter().rev().fold(0.0, |acc, &a| acc * ax + a.abs())
}

#[inline]
fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Value and a rigorous bound on its rounding error (coefficients exact).
#[inline]
fn eval_err(c: &[f64], x: f64) -> (f64, f64) {
    let v = horner(c, x);
    let g = (2 * c.len() + 2) as f64 * U * 1.01;
    (v, g * abs_eval(c, x) + f64::MIN_POSITIVE)
}

/// Certified sign of a polynomial with exact double coefficients.
#[inline]
fn certain_sign(c: &[f64], x: f64) -> Option<Ordering> {
    let (v, e) = eval_err(c, x);
    if v > e {
        Some(Ordering::Greater)
    } else if v < -e {
        Some(Ordering::Less)
    } else {
        None
    }
}

/// Brackets, each holding a real root, for all roots in `[lo, hi]` of
/// `c0 + c1 x + c2 x^2` with integer coefficients (as exact doubles).
/// `None` when certification fails.
fn quadratic_root_brackets(c: [f64; 3], lo: f64, hi: f64) -> Option<ArrayVec<(f64, f64), 2>> {
    let [c0, c1, c2] = c;
    let mut roots: ArrayVec<f64, 2> = ArrayVec::new();
    let mut exact_double = false;
    if c2 == 0.0 {
        if c1 == 0.0 {
            return Some(ArrayVec::new());
        }
        roots.push(-c0 / c1);
    } else {
        let disc = (c1 as i128) * (c1 as i128) - 4 * (c2 as i128) * (c0 as i128);
        match disc.cmp(&0) {
            Ordering::Less => return Some(ArrayVec::new()),
            Ordering::Equal => {
                roots.push(-c1 / (2.0 * c2));
                exact_double = true;
            }
            Ordering::Greater => {
                let sq = (disc as f64).sqrt();
                let sgn = if c1 >= 0.0 { 1.0 } else { -1.0 };
                let q = -0.5 * (c1 + sgn * sq);
                roots.push(q / c2);
                roots.push(c0 / q);
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let coeffs = [c0, c1, c2];
    let mut out = ArrayVec::new();
    for &x in &roots {
        if !x.is_finite() {
            return None;
        }
        let br = if exact_double || c2 == 0.0 {
            // A correctly rounded quotient: the root is within half an ulp.
            (x.next_down(), x.next_up())
        } else {
            certify_crossing(&coeffs, x)?
        };
        if br.1 < lo || br.0 > hi {
            continue;
        }
        out.push(br);
    }
    if out.len() == 2 && out[0].1 >= out[1].0 {
        return None;
    }
    Some(out)
}

/// Smallest bracket `[x - w, x + w]` across which `c` changes sign for certain.
fn certify_crossing(c: &[f64], x: f64) -> Option<(f64, f64)> {
    let mut w = x.abs().max(1e-300) * 4.0 * f64::EPSILON;
    while w < 1e-11 {
        let (a, b) = (x - w, x + w);
        if let (Some(sa), Some(sb)) = (certain_sign(c, a), certain_sign(c, b)) {
            if sa != sb {
                return Some((a, b));
            }
        }
        w *= 8.0;
    }
    None
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    u: f64,
    v: f64,
    /// +1 where P increases, -1 where it decreases.
    dir: f64,
    ru: (f64, f64),
    rv: (f64, f64),
}

/// Per-prefix sublevel solver for degree <= 3; see the module notes.
#[derive(Debug, Clone)]
pub struct PrefixKernel {
    /// `a_0 = 0`, then `a_1..a_3`.
    r: [f64; 4],
    lo: f64,
    hi: f64,
    pieces: ArrayVec<Piece, 3>,
    crit: ArrayVec<(f64, f64), 2>,
    /// Superset of `{|P'| >= kappa}`; `None` when there is no slope condition.
    mask: Option<Small>,
    range: (f64, f64),
}

/// Largest coefficient magnitude the kernel accepts.
pub const KERNEL_COEFF_LIMIT: i64 = 1 << 20;

impl PrefixKernel {
    /// `prefix[0]` is ignored. Returns `None` when the prefix is constant,
    /// coefficients are too large, `kappa` is not a small integer, or a
    /// certification step fails.
    pub fn new(prefix: &[i64], lo: f64, hi: f64, kappa: f64) -> Option<PrefixKernel> {
        if prefix.len() > 4 || prefix.iter().any(|c| c.abs() > KERNEL_COEFF_LIMIT) {
            return None;
        }
        if kappa.fract() != 0.0 || kappa < 0.0 || kappa > KERNEL_COEFF_LIMIT as f64 {
            return None;
        }
        let mut r = [0.0; 4];
        for (i, &c) in prefix.iter().enumerate().skip(1) {
            r[i] = c as f64;
        }
        if r[1..].iter().all(|&c| c == 0.0) {
            return None;
        }
        let d = [r[1], 2.0 * r[2], 3.0 * r[3]];
        let crit = quadratic_root_brackets(d, lo, hi)?;
        let mut pieces = ArrayVec::new();
        let mut start = lo;
        let mut bounds: ArrayVec<(f64, f64), 3> = crit.iter().map(|&(a, b)| (a.max(lo), b.min(hi))).collect();
        bounds.push((hi, hi));
        for &(a, b) in &bounds {
            if start < a {
                let mid = start + (a - start) * 0.5;
                let dir = match certain_sign(&d, mid)? {
                    Ordering::Greater => 1.0,
                    Ordering::Less => -1.0,
                    Ordering::Equal => return None,
                };
                pieces.push(Piece {
                    u: start,
                    v: a,
                    dir,
                    ru: eval_err(&r, start),
                    rv: eval_err(&r, a),
                });
            }
            start = start.max(b);
        }
        let crit: ArrayVec<(f64, f64), 2> = bounds[..bounds.len() - 1].iter().copied().collect();

        let mask = if kappa > 0.0 {
            let mut marks = Small::new();
            for m in [d[0] - kappa, d[0] + kappa] {
                for (a, b) in quadratic_root_brackets([m, d[1], d[2]], lo, hi)? {
                    marks.push((a.max(lo), b.min(hi)));
                }
            }
            merge_small(&mut marks);
            let up = [d[0] - kappa, d[1], d[2]];
            let down = [d[0] + kappa, d[1], d[2]];
            let mut out = Small::new();
            let mut start = lo;
            for &(a, b) in marks.iter().chain(std::iter::once(&(hi, hi))) {
                if start < a {
                    let mid = start + (a - start) * 0.5;
                    let ok = certain_sign(&up, mid)? != Ordering::Less
                        || certain_sign(&down, mid)? != Ordering::Greater;
                    if ok {
                        out.push((start, a));
                    }
                }
                if a < b || (a == b && a != hi) {
                    out.push((a, b));
                }
                start = start.max(b);
            }
            merge_small(&mut out);
            Some(out)
        } else {
            None
        };

        let m1 = |x: f64| abs_eval(&d, x);
        let mut rmin = f64::INFINITY;
        let mut rmax = f64::NEG_INFINITY;
        for p in &pieces {
            for (v, e) in [p.ru, p.rv] {
                rmin = rmin.min(v - e);
                rmax = rmax.max(v + e);
            }
        }
        for &(a, b) in &crit {
            let (v, e) = eval_err(&r, a);
            let slack = (b - a) * m1(a.abs().max(b.abs())) * 1.01;
            rmin = rmin.min(v - e - slack);
            rmax = rmax.max(v + e + slack);
        }
        if pieces.is_empty() && crit.is_empty() {
            let (v, e) = eval_err(&r, lo);
            rmin = v - e;
            rmax = v + e;
        }
        Some(PrefixKernel {
            r,
            lo,
            hi,
            pieces,
            crit,
            mask,
            range: (rmin, rmax),
        })
    }

    /// Integer `a_0` values for which the sublevel set at `eta` can be
    /// nonempty: `-a_0` must lie within `eta` of `R([lo, hi])`.
    pub fn a0_range(&self, eta: f64) -> (i64, i64) {
        let lo = (-self.range.1 - eta).ceil() - 1.0;
        let hi = (-self.range.0 + eta).floor() + 1.0;
        (lo as i64, hi as i64)
    }

    /// Appends the sublevel set of `R + a_0` at level `eta` to `out`.
    /// Returns `false` (leaving `out` untouched) when certification fails.
    pub fn level_set(&self, a0: i64, eta: f64, out: &mut Vec<(f64, f64)>) -> bool {
        let start = out.len();
        let a0f = a0 as f64;
        let mut c = self.r;
        c[0] = a0f;
        let shift_err = |v: f64, e: f64| (v + a0f, e + 2.0 * U * (v.abs() + a0f.abs()));
        let dc = [c[1], 2.0 * c[2], 3.0 * c[3]];
        let mut pending = Small::new();
        for p in &self.pieces {
            let (fu, eu) = shift_err(p.ru.0, p.ru.1);
            let (fv, ev) = shift_err(p.rv.0, p.rv.1);
            // F = dir * P is increasing on the piece.
            let (fu, fv) = (p.dir * fu, p.dir * fv);
            if fv + ev < -eta || fu - eu > eta {
                continue;
            }
            // When both ends need solving, linearize about the zero for
            // starting points.
            let (gl, gr) = if fu + eu < -eta && fv - ev > eta {
                let x0 = newton(&c, 2.0 * U * a0f.abs(), &dc, p.u, p.v, p.dir, f64::NAN);
                let s = p.dir * horner(&dc, x0);
                if s > 0.0 {
                    (x0 - eta / s, x0 + eta / s)
                } else {
                    (f64::NAN, f64::NAN)
                }
            } else {
                (f64::NAN, f64::NAN)
            };
            let left = if fu + eu >= -eta {
                p.u
            } else {
                // Solve F = -eta, i.e. P = -dir * eta.
                match solve_outward(&c, &dc, p.u, p.v, -p.dir * eta, p.dir, false, gl) {
                    Some(x) => x,
                    None => {
                        out.truncate(start);
                        return false;
                    }
                }
            };
            let right = if fv - ev <= eta {
                p.v
            } else {
                match solve_outward(&c, &dc, p.u, p.v, p.dir * eta, p.dir, true, gr) {
                    Some(x) => x,
                    None => {
                        out.truncate(start);
                        return false;
                    }
                }
            };
            if left <= right {
                pending.push((left, right));
            }
        }
        for &(a, b) in &self.crit {
            let (va, ea) = eval_err(&c, a);
            let (vb, eb) = eval_err(&c, b);
            let slack = (b - a) * abs_eval(&dc, a.abs().max(b.abs())) * 1.01;
            let lower = (va.abs() - ea).max(vb.abs() - eb) - slack;
            if lower <= eta {
                pending.push((a, b));
            }
        }
        merge_small(&mut pending);
        match &self.mask {
            Some(mask) => {
                let (mut i, mut j) = (0, 0);
                let mut last: Option<(f64, f64)> = None;
                while i < pending.len() && j < mask.len() {
                    let lo = pending[i].0.max(mask[j].0);
                    let hi = pending[i].1.min(mask[j].1);
                    if lo <= hi {
                        match &mut last {
                            Some(l) if lo <= l.1 => l.1 = l.1.max(hi),
                            _ => {
                                if let Some(l) = last.take() {
                                    out.push(l);
                                }
                                last = Some((lo, hi));
                            }
                        }
                    }
                    if pending[i].1 < mask[j].1 {
                        i += 1;
                    } else {
                        j += 1;
                    }
                }
                out.extend(last);
            }
            None => out.extend_from_slice(&pending),
        }
        debug_assert!(out[start..].iter().all(|&(a, b)| a >= self.lo && b <= self.hi));
        true
    }
}

/// On a piece where `dir * P` increases, finds the level crossing
/// `P = y` and steps outward until the sign is certified: to the left of
/// the crossing for a left endpoint, to the right for a right endpoint.
#[allow(clippy::too_many_arguments)]
fn solve_outward(c: &[f64; 4], dc: &[f64; 3], u: f64, v: f64, y: f64, dir: f64, right: bool, guess: f64) -> Option<f64> {
    let mut shifted = *c;
    shifted[0] -= y;
    let shift_err = 2.0 * U * (c[0].abs() + y.abs());
    let x = newton(&shifted, shift_err, dc, u, v, dir, guess);
    // Outward certification against the shifted level, starting from the
    // step the rounding bound suggests.
    let (_, err) = eval_err(&shifted, x);
    let slope = horner(dc, x).abs();
    let mut w = (x.abs().max(1e-300) * 4.0 * f64::EPSILON).max(if slope > 0.0 { (err + shift_err) / slope } else { 0.0 });
    while w < 1e-11 {
        let z = if right { (x + w).min(v) } else { (x - w).max(u) };
        let (val, e) = eval_err(&shifted, z);
        let e = e + shift_err;
        let s = dir * val;
        if right && (s > e || z == v) {
            return Some(z);
        }
        if !right && (s < -e || z == u) {
            return Some(z);
        }
        w *= 8.0;
    }
    None
}

/// Safeguarded Newton for the zero of `shifted` on `[u, v]`, where
/// `dir * shifted` increases. Stops once the value is below its rounding
/// bound; the result is only a candidate.
fn newton(shifted: &[f64; 4], shift_err: f64, dc: &[f64; 3], u: f64, v: f64, dir: f64, guess: f64) -> f64 {
    let g = |x: f64| dir * horner(shifted, x);
    let (mut a, mut b) = (u, v);
    let mut x = if guess >= a && guess <= b {
        guess
    } else {
        let (ga, gb) = (g(a).min(0.0), g(b).max(0.0));
        if gb > ga {
            a - ga * (b - a) / (gb - ga)
        } else {
            0.5 * (a + b)
        }
    };
    if !(x >= a && x <= b) {
        x = 0.5 * (a + b);
    }
    for _ in 0..100 {
        let (val, err) = eval_err(shifted, x);
        let gx = dir * val;
        if gx.abs() <= err + shift_err {
            // Rounding noise: the crossing is as close as it gets.
            break;
        }
        if gx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let dg = dir * horner(dc, x);
        let mut nx = if dg != 0.0 { x - gx / dg } else { f64::NAN };
        if !(nx > a && nx < b) {
            nx = 0.5 * (a + b);
        }
        if (nx - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) || b - a <= f64::EPSILON * x.abs() {
            x = nx;
            break;
        }
        x = nx;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::interval::length_sum;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poly(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    fn close(a: &[(f64, f64)], b: &[(f64, f64)], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x.0 - y.0).abs() <= tol && (x.1 - y.1).abs() <= tol)
    }

    #[test]
    fn linear_example() {
        // |4x| <= 1/4 on [-1/2, 1/2] is [-1/16, 1/16].
        let s = sublevel_exact(&poly(&[0, 4]), 0.25, 0.0, -0.5, 0.5, BRACKET_WIDTH);
        assert!(close(&s, &[(-0.0625, 0.0625)], 1e-12), "{s:?}");
        let k = PrefixKernel::new(&[0, 4], -0.5, 0.5, 0.0).unwrap();
        let mut out = Vec::new();
        assert!(k.level_set(0, 0.25, &mut out));
        assert!(close(&out, &[(-0.0625, 0.0625)], 1e-12), "{out:?}");
    }

    #[test]
    fn slope_condition_removes_flat_parts() {
        // P = 4x^2 - 1/4 style: 16x^2 - 1 has |P| <= 1 on [-1/(2 sqrt 2), ..]
        // and |P'| = 32|x| >= 2 off (-1/16, 1/16).
        let p = poly(&[-1, 0, 16]);
        let s = sublevel_exact(&p, 1.0, 2.0, -0.5, 0.5, BRACKET_WIDTH);
        let r = (2.0f64).sqrt() / 4.0;
        let want = [(-r, -0.0625), (0.0625, r)];
        assert!(close(&s, &want, 1e-12), "{s:?}");
        let k = PrefixKernel::new(&[0, 0, 16], -0.5, 0.5, 2.0).unwrap();
        let mut out = Vec::new();
        assert!(k.level_set(-1, 1.0, &mut out));
        assert!(close(&out, &want, 1e-12), "{out:?}");
    }

    #[test]
    fn empty_when_far_from_zero() {
        assert!(sublevel_exact(&poly(&[5, 1]), 0.5, 0.0, -0.5, 0.5, BRACKET_WIDTH).is_empty());
        let k = PrefixKernel::new(&[0, 1], -0.5, 0.5, 0.0).unwrap();
        let (lo, hi) = k.a0_range(0.5);
        assert!(lo <= -1 && hi >= 1 && lo >= -3 && hi <= 3, "{lo} {hi}");
    }

    /// f64 evaluation far from the boundary decides membership; points
    /// within a relative margin of the boundary are skipped.
    fn clearly(c: &[i64], eta: f64, kappa: f64, x: f64) -> Option<bool> {
        let cf: Vec<f64> = c.iter().map(|&v| v as f64).collect();
        let dc: Vec<f64> = cf.iter().enumerate().skip(1).map(|(i, &v)| i as f64 * v).collect();
        let p = horner(&cf, x).abs();
        let d = horner(&dc, x).abs();
        let m = 1e-7;
        let inside = p < eta * (1.0 - m) - m && (kappa == 0.0 || d > kappa * (1.0 + m) + m);
        let outside = p > eta * (1.0 + m) + m || (kappa > 0.0 && d < kappa * (1.0 - m) - m);
        if inside {
            Some(true)
        } else if outside {
            Some(false)
        } else {
            None
        }
    }

    fn contains(set: &[(f64, f64)], x: f64) -> bool {
        set.iter().any(|&(a, b)| a <= x && x <= b)
    }

    #[test]
    fn kernel_agrees_with_exact_engine() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut fallbacks = 0;
        for case in 0..400 {
            let h: i64 = [3, 20, 200][case % 3];
            let c: Vec<i64> = (0..4).map(|_| rng.gen_range(-h..=h)).collect();
            let eta = [0.5, 1.0 / 1024.0, 3.0, 1e-6][case % 4];
            let kappa = [0.0, 2.0][(case / 4) % 2];
            let (lo, hi) = [(-0.5, 0.5), (-0.125, 0.25)][(case / 8) % 2];
            let exact = sublevel_exact(&poly(&c), eta, kappa, lo, hi, BRACKET_WIDTH);
            let Some(k) = PrefixKernel::new(&c, lo, hi, kappa) else {
                fallbacks += 1;
                continue;
            };
            let (alo, ahi) = k.a0_range(eta);
            if !exact.is_empty() {
                assert!(alo <= c[0] && c[0] <= ahi, "{c:?}: a0 outside {alo}..{ahi}");
            }
            let mut fast = Vec::new();
            if !k.level_set(c[0], eta, &mut fast) {
                fallbacks += 1;
                continue;
            }
            let diff = (length_sum(&fast) - length_sum(&exact)).abs();
            assert!(diff < 1e-9, "{c:?} eta={eta} kappa={kappa}: {fast:?} vs {exact:?}");
            for i in 0..=200 {
                let x = lo + (hi - lo) * i as f64 / 200.0;
                if let Some(want) = clearly(&c, eta, kappa, x) {
                    assert_eq!(contains(&exact, x), want, "exact {c:?} at {x}");
                    assert_eq!(contains(&fast, x), want, "kernel {c:?} at {x}");
                }
            }
        }
        assert!(fallbacks < 20, "{fallbacks} fallbacks");
    }
}
