//! Random well-formed expressions for the property suites.

#![allow(dead_code)]

use fieldcomm::expr::validate;
use fieldcomm::{Atom, Coefficient, Expr, FieldKind, FieldOp, Index, Point, Term};
use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DUMMIES: [&str; 8] = ["k", "l", "m", "n", "p", "q", "r", "s"];

/// Where an index goes once it has been chosen.
enum Slot {
    Eps(usize, usize),
    Kron(usize, usize),
    Coord(usize),
    DeltaDeriv(usize),
    Component(usize),
    OpDeriv(usize),
}

struct Shape {
    eps: Vec<[Index; 3]>,
    kron: Vec<[Index; 2]>,
    coords: Vec<(Point, Index)>,
    delta: Option<(Point, Point, Vec<Index>)>,
    ops: Vec<(FieldKind, Index, Point, Vec<Index>)>,
}

fn placeholder() -> Index {
    Index::Fixed(1)
}

fn kind(rng: &mut ChaCha8Rng) -> FieldKind {
    if rng.gen_bool(0.5) {
        FieldKind::E
    } else {
        FieldKind::B
    }
}

/// One term with the given free indices and free point.
pub fn random_term(
    rng: &mut ChaCha8Rng,
    free: &[&str],
    free_point: Option<&str>,
    units: (i32, i32, i32),
) -> Term {
    let integrated: Vec<&str> = ["y", "z"]
        .into_iter()
        .filter(|_| rng.gen_bool(0.4))
        .collect();
    let points: Vec<Point> = free_point
        .into_iter()
        .chain(integrated.iter().copied())
        .map(Point::new)
        .collect();
    let mut shape = Shape {
        eps: Vec::new(),
        kron: Vec::new(),
        coords: Vec::new(),
        delta: None,
        ops: Vec::new(),
    };
    for _ in 0..rng.gen_range(0..=2) {
        shape
            .eps
            .push([placeholder(), placeholder(), placeholder()]);
    }
    if rng.gen_bool(0.3) {
        shape.kron.push([placeholder(), placeholder()]);
    }
    if !points.is_empty() {
        if rng.gen_bool(0.3) {
            shape
                .coords
                .push((points.choose(rng).unwrap().clone(), placeholder()));
        }
        if points.len() >= 2 && rng.gen_bool(0.5) {
            let mut two: Vec<Point> = points.choose_multiple(rng, 2).cloned().collect();
            two.shuffle(rng);
            let derivs = if rng.gen_bool(0.5) {
                vec![placeholder()]
            } else {
                Vec::new()
            };
            shape.delta = Some((two[0].clone(), two[1].clone(), derivs));
        }
        for _ in 0..rng.gen_range(0..=3) {
            let derivs = if rng.gen_bool(0.3) {
                vec![placeholder()]
            } else {
                Vec::new()
            };
            shape.ops.push((
                kind(rng),
                placeholder(),
                points.choose(rng).unwrap().clone(),
                derivs,
            ));
        }
        // every point must be referenced
        for p in &points {
            let used = shape.ops.iter().any(|o| &o.2 == p)
                || shape.coords.iter().any(|c| &c.0 == p)
                || shape.delta.as_ref().is_some_and(|d| &d.0 == p || &d.1 == p);
            if !used {
                shape
                    .ops
                    .push((kind(rng), placeholder(), p.clone(), Vec::new()));
            }
        }
    }
    let mut slots = Vec::new();
    let count = |shape: &Shape| {
        3 * shape.eps.len()
            + 2 * shape.kron.len()
            + shape.coords.len()
            + shape.delta.as_ref().map_or(0, |d| d.2.len())
            + shape.ops.iter().map(|o| 1 + o.3.len()).sum::<usize>()
    };
    while count(&shape) < free.len() {
        shape.kron.push([placeholder(), placeholder()]);
    }
    for (a, _) in shape.eps.iter().enumerate() {
        (0..3).for_each(|b| slots.push(Slot::Eps(a, b)));
    }
    for (a, _) in shape.kron.iter().enumerate() {
        (0..2).for_each(|b| slots.push(Slot::Kron(a, b)));
    }
    (0..shape.coords.len()).for_each(|a| slots.push(Slot::Coord(a)));
    if let Some(d) = &shape.delta {
        (0..d.2.len()).for_each(|a| slots.push(Slot::DeltaDeriv(a)));
    }
    for (a, o) in shape.ops.iter().enumerate() {
        slots.push(Slot::Component(a));
        if !o.3.is_empty() {
            slots.push(Slot::OpDeriv(a));
        }
    }
    slots.shuffle(rng);
    let mut names: Vec<Index> = free.iter().map(|n| Index::named(n)).collect();
    let rest = slots.len() - names.len();
    let pairs = rng.gen_range(rest / 4..=rest / 2);
    for d in DUMMIES.iter().take(pairs) {
        names.push(Index::named(d));
        names.push(Index::named(d));
    }
    while names.len() < slots.len() {
        names.push(Index::Fixed(rng.gen_range(1..=3)));
    }
    names[free.len()..].shuffle(rng);
    for (slot, ix) in slots.iter().zip(names) {
        match *slot {
            Slot::Eps(a, b) => shape.eps[a][b] = ix,
            Slot::Kron(a, b) => shape.kron[a][b] = ix,
            Slot::Coord(a) => shape.coords[a].1 = ix,
            Slot::DeltaDeriv(a) => shape.delta.as_mut().unwrap().2[a] = ix,
            Slot::Component(a) => shape.ops[a].1 = ix,
            Slot::OpDeriv(a) => shape.ops[a].3[0] = ix,
        }
    }
    let mut num = rng.gen_range(-6..=6);
    if num == 0 {
        num = 1;
    }
    let coeff = Coefficient::new(
        Rational64::new(num, rng.gen_range(1..=4)),
        units.0,
        units.1,
        units.2,
    );
    let mut t = Term::new(coeff);
    for ix in shape.eps {
        t = t.with_atom(Atom::Epsilon(ix));
    }
    for ix in shape.kron {
        t = t.with_atom(Atom::Kronecker(ix));
    }
    for (point, index) in shape.coords {
        t = t.with_atom(Atom::Coord { point, index });
    }
    if let Some((from, to, derivs)) = shape.delta {
        t = t.with_atom(Atom::Delta { from, to, derivs });
    }
    for (k, c, p, d) in shape.ops {
        t = t.with_op(FieldOp::new(k, c, p).with_derivs(d));
    }
    for p in integrated {
        t = t.integrate(p);
    }
    t
}

/// A well-formed expression of one to four terms.
pub fn random_expr(seed: u64) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free: Vec<&str> = match rng.gen_range(0..3) {
        0 => vec![],
        1 => vec!["i"],
        _ => vec!["i", "j"],
    };
    let free_point = rng.gen_bool(0.5).then_some("x");
    let units = (
        rng.gen_range(0..=1),
        rng.gen_range(-1..=1),
        rng.gen_range(0..=1),
    );
    let mut terms: Vec<Term> = (0..rng.gen_range(1..=4))
        .map(|_| random_term(&mut rng, &free, free_point, units))
        .collect();
    // copies under a dummy permutation and a point exchange, so that like
    // terms and cancellations occur
    for n in 0..terms.len() {
        if rng.gen_bool(0.4) {
            let mut c = relabelled(&mut rng, &terms[n]);
            if rng.gen_bool(0.5) {
                c.coeff = -c.coeff;
            }
            terms.push(c);
        }
    }
    terms.shuffle(&mut rng);
    let e = Expr::from_terms(terms);
    debug_assert!(validate(&e).is_empty(), "{e}: {:?}", validate(&e));
    e
}

/// The same term under a random dummy permutation with `y` and `z` exchanged.
pub fn relabelled(rng: &mut ChaCha8Rng, t: &Term) -> Term {
    let mut perm = DUMMIES.to_vec();
    perm.shuffle(rng);
    t.map_indices(
        |ix| match ix.name().and_then(|n| DUMMIES.iter().position(|d| *d == n)) {
            Some(k) => Index::named(perm[k]),
            None => ix.clone(),
        },
    )
    .map_points(|p| match p.as_str() {
        "y" => Point::new("z"),
        "z" => Point::new("y"),
        _ => p.clone(),
    })
}

/// A single term holding at least two field operators of both kinds, in an
/// order that differs from its reverse.
pub fn random_ordered_term(seed: u64) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let t = random_term(&mut rng, &["i"], Some("x"), (1, 0, 1));
        let word: Vec<FieldKind> = t.ops.iter().map(|o| o.kind).collect();
        let mut rev = word.clone();
        rev.reverse();
        if word.len() >= 2 && word != rev {
            return Expr::from_terms(vec![t]);
        }
    }
}

pub fn kind_word(t: &Term) -> Vec<FieldKind> {
    t.ops.iter().map(|o| o.kind).collect()
}

pub fn reversed_ops(e: &Expr) -> Expr {
    let terms = e
        .terms
        .iter()
        .map(|t| {
            let mut t = t.clone();
            t.ops.reverse();
            t
        })
        .collect();
    e.with_terms(terms)
}
