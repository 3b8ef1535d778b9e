//! Quadrature of expressions with random smooth c-number stand-ins for the
//! field operators.
//!
//! Each field component is a sum of 8 random plane waves under a gaussian
//! envelope, so every integrand factorizes over the three axes into
//! one-dimensional integrals. A Dirac delta is applied by its definition,
//! `int dy g(y) d/dx^k delta(x - y) = d/dx^k g(x)`, never through the
//! rewrite rules.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GridSpec;
use crate::error::{Error, Result};
use crate::expr::{expand_concrete, Atom, Expr, FieldKind, Index, Point, Term};

const MODES: usize = 8;

#[derive(Debug, Clone, Copy)]
struct Wave {
    amp: Complex64,
    k: [f64; 3],
}

/// Derivative orders kept in the sample table; higher ones are computed.
const TABLED_ORDERS: usize = 4;

struct RandomFields {
    /// `1 / sigma^2` of the envelope `exp(-|x|^2 / (2 sigma^2))`.
    s: f64,
    waves: BTreeMap<(FieldKind, u8), Vec<Wave>>,
    nodes: Vec<f64>,
    /// Per field component and wave: `[axis][order][node]`.
    samples: BTreeMap<(FieldKind, u8), Vec<Vec<Vec<Vec<Complex64>>>>>,
}

impl RandomFields {
    fn new(seed: u64, grid: &GridSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // wavelengths no shorter than an eighth of the box
        let kmax = 16.0 * std::f64::consts::PI / grid.extent / 3f64.sqrt();
        let sigma = grid.extent / 16.0;
        let mut waves = BTreeMap::new();
        for kind in [FieldKind::E, FieldKind::B] {
            for c in 1..=3u8 {
                let mut v = Vec::with_capacity(2 * MODES);
                for _ in 0..MODES {
                    let a: f64 = rng.gen_range(-1.0..1.0);
                    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let k = [(); 3].map(|_| rng.gen_range(-kmax..kmax));
                    // real wave = two complex exponentials
                    let half = Complex64::from_polar(a / 2.0, phase);
                    v.push(Wave { amp: half, k });
                    v.push(Wave {
                        amp: half.conj(),
                        k: k.map(|x| -x),
                    });
                }
                waves.insert((kind, c), v);
            }
        }
        let mut f = RandomFields {
            s: 1.0 / (sigma * sigma),
            waves,
            nodes: grid.nodes().collect(),
            samples: BTreeMap::new(),
        };
        let samples = f
            .waves
            .iter()
            .map(|(key, ws)| {
                let per_wave = ws
                    .iter()
                    .map(|w| {
                        (0..3)
                            .map(|axis| {
                                (0..TABLED_ORDERS)
                                    .map(|n| {
                                        f.nodes
                                            .iter()
                                            .map(|&t| f.wave_deriv(w.k[axis], n, t))
                                            .collect()
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect();
                (*key, per_wave)
            })
            .collect();
        f.samples = samples;
        f
    }

    /// n-th derivative of `exp(i k t - s t^2 / 2)`: a polynomial in
    /// `w = i k - s t` times the function.
    fn wave_deriv(&self, k: f64, n: usize, t: f64) -> Complex64 {
        let w = Complex64::new(-self.s * t, k);
        let mut poly = vec![Complex64::new(1.0, 0.0)];
        for _ in 0..n {
            // P' = w P - s dP/dw
            let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
            for (j, c) in poly.iter().enumerate() {
                next[j + 1] += c;
                if j > 0 {
                    next[j - 1] -= c * self.s * j as f64;
                }
            }
            poly = next;
        }
        let p = poly
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c);
        p * Complex64::new(-self.s * t * t / 2.0, k * t).exp()
    }
}

/// One factor along one axis: a wave with its own derivative order, or a
/// coordinate power.
#[derive(Clone, Copy)]
enum Factor<'a> {
    Wave {
        k: f64,
        order: usize,
        table: &'a [Vec<Complex64>],
    },
    Power(u32),
}

/// `j`-th derivative of one factor at node `n`.
fn factor_deriv(f: &RandomFields, factor: Factor, n: usize, j: usize) -> Complex64 {
    let t = f.nodes[n];
    match factor {
        Factor::Wave { k, order, table } => match table.get(order + j) {
            Some(v) => v[n],
            None => f.wave_deriv(k, order + j, t),
        },
        Factor::Power(p) => {
            if j as u32 > p {
                Complex64::new(0.0, 0.0)
            } else {
                let falling: f64 = ((p - j as u32 + 1)..=p).map(f64::from).product();
                Complex64::new(falling * t.powi((p - j as u32) as i32), 0.0)
            }
        }
    }
}

fn product_value(f: &RandomFields, factors: &[Factor], n: usize) -> Complex64 {
    factors.iter().fold(Complex64::new(1.0, 0.0), |acc, &fac| {
        acc * factor_deriv(f, fac, n, 0)
    })
}

/// `m`-th derivative of a product at node `n`, by the Leibniz rule.
fn product_deriv(f: &RandomFields, factors: &[Factor], n: usize, m: usize) -> Complex64 {
    if m == 0 {
        return product_value(f, factors, n);
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); m + 1];
    acc[0] = Complex64::new(1.0, 0.0);
    for &fac in factors {
        let d: Vec<Complex64> = (0..=m).map(|j| factor_deriv(f, fac, n, j)).collect();
        let mut next = vec![Complex64::new(0.0, 0.0); m + 1];
        for (k, slot) in next.iter_mut().enumerate() {
            let mut binom = 1.0;
            for j in 0..=k {
                *slot += acc[j] * d[k - j] * binom;
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        acc = next;
    }
    acc[m]
}

fn quad(f: &RandomFields, h: f64, g: impl Fn(usize) -> Complex64) -> Complex64 {
    (0..f.nodes.len()).map(g).sum::<Complex64>() * h
}

fn fixed(ix: &Index) -> Result<usize> {
    ix.fixed()
        .map(|v| v as usize - 1)
        .ok_or_else(|| Error::Precondition(format!("index `{ix}` left symbolic")))
}

fn term_value(f: &RandomFields, t: &Term, grid: &GridSpec) -> Result<Complex64> {
    let points: Vec<Point> = t.integrated.iter().cloned().collect();
    if let Some(p) = t
        .referenced_points()
        .iter()
        .find(|p| !t.integrated.contains(*p))
    {
        return Err(Error::Precondition(format!(
            "point `{p}` is not integrated"
        )));
    }
    let deltas: Vec<&Atom> = t.deltas().collect();
    if deltas.len() > 1 {
        return Err(Error::Precondition(
            "more than one delta function in a term".into(),
        ));
    }
    let delta = match deltas.first() {
        Some(Atom::Delta { from, to, derivs }) => {
            let mut m = [0usize; 3];
            for d in derivs {
                m[fixed(d)?] += 1;
            }
            Some((from.clone(), to.clone(), m))
        }
        _ => None,
    };
    // coordinate powers per (point, axis)
    let mut powers: BTreeMap<(Point, usize), u32> = BTreeMap::new();
    for a in &t.cnumbers {
        match a {
            Atom::Coord { point, index } => {
                *powers.entry((point.clone(), fixed(index)?)).or_default() += 1
            }
            Atom::Delta { .. } => {}
            other => return Err(Error::Precondition(format!("unevaluated symbol {other:?}"))),
        }
    }
    let mut op_info = Vec::with_capacity(t.ops.len());
    for op in &t.ops {
        let comp = fixed(&op.component)? as u8 + 1;
        let mut orders = [0usize; 3];
        for d in &op.derivs {
            orders[fixed(d)?] += 1;
        }
        op_info.push((
            op.point.clone(),
            &f.waves[&(op.kind, comp)],
            &f.samples[&(op.kind, comp)],
            orders,
        ));
    }
    for p in &points {
        let used = op_info.iter().any(|(q, ..)| q == p) || powers.keys().any(|(q, _)| q == p);
        let in_delta = delta.as_ref().is_some_and(|(x, y, _)| x == p || y == p);
        if !used && !in_delta {
            return Err(Error::Precondition(format!(
                "integral over `{p}` has no decaying factor"
            )));
        }
    }

    let h = grid.spacing();
    let mut total = Complex64::new(0.0, 0.0);
    let mut choice = vec![0usize; op_info.len()];
    loop {
        let mut amp = Complex64::new(1.0, 0.0);
        for (n, (_, waves, ..)) in op_info.iter().enumerate() {
            amp *= waves[choice[n]].amp;
        }
        let mut value = amp;
        for axis in 0..3 {
            let factors_at = |p: &Point| -> Vec<Factor> {
                let mut v: Vec<Factor> = op_info
                    .iter()
                    .enumerate()
                    .filter(|(_, (q, ..))| q == p)
                    .map(|(n, (_, waves, table, orders))| Factor::Wave {
                        k: waves[choice[n]].k[axis],
                        order: orders[axis],
                        table: &table[choice[n]][axis],
                    })
                    .collect();
                if let Some(&pw) = powers.get(&(p.clone(), axis)) {
                    v.push(Factor::Power(pw));
                }
                v
            };
            let mut axis_value = Complex64::new(1.0, 0.0);
            let mut done = BTreeSet::new();
            if let Some((x, y, m)) = &delta {
                let (fx, gy, m) = (factors_at(x), factors_at(y), m[axis]);
                axis_value *= quad(f, h, |n| {
                    product_value(f, &fx, n) * product_deriv(f, &gy, n, m)
                });
                done.insert(x.clone());
                done.insert(y.clone());
            }
            for p in points.iter().filter(|p| !done.contains(*p)) {
                let fp = factors_at(p);
                axis_value *= quad(f, h, |n| product_value(f, &fp, n));
            }
            value *= axis_value;
        }
        total += value;
        // next combination of waves
        let mut n = 0;
        loop {
            if n == choice.len() {
                let (re, im) = t.coeff.to_complex();
                return Ok(total * Complex64::new(re, im));
            }
            choice[n] += 1;
            if choice[n] < op_info[n].1.len() {
                break;
            }
            choice[n] = 0;
            n += 1;
        }
    }
}

/// The operator kinds of a term in order, e.g. `EB`.
fn kind_word(t: &Term) -> String {
    t.ops.iter().map(|op| op.kind.to_string()).collect()
}

fn sorted(w: &str) -> String {
    let mut c: Vec<char> = w.chars().collect();
    c.sort_unstable();
    c.into_iter().collect()
}

/// Max relative difference between `lhs` and `rhs` with random fields
/// substituted, over all assignments of the free indices. The scale is the
/// sum of the absolute values of the terms.
pub fn random_field_check(lhs: &Expr, rhs: &Expr, seed: u64, grid: &GridSpec) -> Result<f64> {
    let words: BTreeSet<String> = lhs.terms.iter().chain(&rhs.terms).map(kind_word).collect();
    for a in &words {
        for b in &words {
            if a != b && sorted(a) == sorted(b) {
                return Err(Error::Precondition(format!(
                    "operator orders {a} and {b} both occur; commuting stand-ins cannot tell them apart"
                )));
            }
        }
    }
    let fields = RandomFields::new(seed, grid);
    let free: Vec<String> = lhs.free_indices.union(&rhs.free_indices).cloned().collect();
    let mut worst: f64 = 0.0;
    for code in 0..3usize.pow(free.len() as u32) {
        let mut c = code;
        let mut env = Vec::new();
        for n in &free {
            env.push((n.clone(), Index::Fixed((c % 3) as u8 + 1)));
            c /= 3;
        }
        let eval = |e: &Expr| -> Result<(Complex64, f64)> {
            let terms = e
                .terms
                .iter()
                .map(|t| env.iter().fold(t.clone(), |t, (n, v)| t.rename_index(n, v)))
                .collect();
            let mut e = e.with_terms(terms);
            e.free_indices.clear();
            let mut sum = Complex64::new(0.0, 0.0);
            let mut scale = 0.0;
            for t in &expand_concrete(&e).terms {
                let v = term_value(&fields, t, grid)?;
                sum += v;
                scale += v.norm();
            }
            Ok((sum, scale))
        };
        let (l, sl) = eval(lhs)?;
        let (r, sr) = eval(rhs)?;
        let scale = sl.max(sr);
        if scale > 0.0 {
            worst = worst.max((l - r).norm() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_expr;

    fn grid() -> GridSpec {
        GridSpec::new(16.0, 128)
    }

    #[test]
    fn identical_sides_agree_exactly() {
        let e = parse_expr("int(x)(x[1](x)*E[2](x)*B[3](x)d[x,1])").unwrap();
        assert_eq!(random_field_check(&e, &e, 7, &grid()).unwrap(), 0.0);
    }

    #[test]
    fn total_derivative_integrates_to_zero() {
        // d/dx^1 (E^2 B^3) integrates to zero
        let lhs = parse_expr("int(x)(E[2](x)d[x,1]*B[3](x))").unwrap();
        let rhs = parse_expr("-int(x)(E[2](x)*B[3](x)d[x,1])").unwrap();
        assert!(random_field_check(&lhs, &rhs, 1, &grid()).unwrap() < 1e-10);
        let wrong = parse_expr("int(x)(E[2](x)*B[3](x)d[x,1])").unwrap();
        assert!(random_field_check(&lhs, &wrong, 1, &grid()).unwrap() > 1e-2);
    }

    #[test]
    fn delta_sifts_by_definition() {
        let lhs = parse_expr("int(x)(int(y)(E[1](x)*B[2](y)*ddelta(x,y)d[x,3]))").unwrap();
        let rhs = parse_expr("-int(x)(E[1](x)d[x,3]*B[2](x))").unwrap();
        assert!(random_field_check(&lhs, &rhs, 3, &grid()).unwrap() < 1e-10);
    }

    #[test]
    fn reordered_operators_refused() {
        let lhs = parse_expr("int(x)(E[1](x)*B[2](x))").unwrap();
        let rhs = parse_expr("int(x)(B[2](x)*E[1](x))").unwrap();
        assert!(matches!(
            random_field_check(&lhs, &rhs, 0, &grid()),
            Err(Error::Precondition(_))
        ));
    }
}
