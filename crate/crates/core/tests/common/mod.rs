//! Random inputs and brute-force oracles shared by the property and
//! acceptance suites.

#![allow(dead_code)]

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use proptest::prelude::*;

use kodual::groupcoh::C2Module;
use kodual::intlin::{FinAbGroup, IntMatrix};

pub fn matrix(max: usize, range: i64) -> impl Strategy<Value = IntMatrix> {
    (1..=max, 1..=max).prop_flat_map(move |(r, c)| {
        prop::collection::vec(-range..=range, r * c).prop_map(move |v| IntMatrix::from_fn(r, c, |i, j| BigInt::from(v[i * c + j])))
    })
}

pub fn is_identity(m: &IntMatrix) -> bool {
    (0..m.rows()).all(|i| (0..m.cols()).all(|j| m.get(i, j) == &BigInt::from((i == j) as i64)))
}

/// Integral involution `U P U^{-1}` with `P` a signed involutive permutation.
pub fn involution(k: usize, seed: &[i64]) -> IntMatrix {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut signs = vec![1i64; k];
    let mut it = seed.iter().copied().cycle();
    let mut i = 0;
    while i < k {
        if i + 1 < k && it.next().unwrap() % 2 == 0 {
            perm.swap(i, i + 1);
            let s = if it.next().unwrap() % 2 == 0 { 1 } else { -1 };
            signs[i] = s;
            signs[i + 1] = s;
            i += 2;
        } else {
            signs[i] = if it.next().unwrap() % 2 == 0 { 1 } else { -1 };
            i += 1;
        }
    }
    let p = IntMatrix::from_fn(k, k, |r, c| if perm[c] == r { BigInt::from(signs[c]) } else { BigInt::zero() });
    // U = product of elementary matrices, U^{-1} the reversed product of inverses.
    let mut u = IntMatrix::identity(k);
    let mut u_inv = IntMatrix::identity(k);
    if k > 1 {
        for _ in 0..3 {
            let (a, b) = ((it.next().unwrap() as usize) % k, (it.next().unwrap() as usize) % k);
            if a == b {
                continue;
            }
            let f = it.next().unwrap() % 3;
            let e = IntMatrix::from_fn(k, k, |r, c| BigInt::from((r == c) as i64 + if (r, c) == (a, b) { f } else { 0 }));
            let e_inv = IntMatrix::from_fn(k, k, |r, c| BigInt::from((r == c) as i64 - if (r, c) == (a, b) { f } else { 0 }));
            u = u.mul(&e).unwrap();
            u_inv = e_inv.mul(&u_inv).unwrap();
        }
    }
    u.mul(&p).unwrap().mul(&u_inv).unwrap()
}

/// A finite module `(Z/m)^k` or a sum of two of them with different `m`.
pub fn finite_module() -> impl Strategy<Value = (C2Module, Vec<u64>, IntMatrix)> {
    let part = (1usize..=3, prop::sample::select(vec![2u64, 3, 4, 6, 8]), prop::collection::vec(0i64..100, 12));
    (part.clone(), prop::option::of((1usize..=2, prop::sample::select(vec![2u64, 4, 5]), prop::collection::vec(0i64..100, 12))))
        .prop_map(|(a, b)| {
            let build = |(k, m, seed): (usize, u64, Vec<i64>)| {
                let c = involution(k, &seed);
                let module = C2Module::lattice(c.clone()).unwrap().reduce_mod(&BigInt::from(m));
                (module, vec![m; k], c)
            };
            let (m1, o1, c1) = build(a);
            match b {
                None => (m1, o1, c1),
                Some(b) => {
                    let (m2, o2, c2) = build(b);
                    let k = o1.len() + o2.len();
                    let c = IntMatrix::from_fn(k, k, |i, j| match (i < o1.len(), j < o1.len()) {
                        (true, true) => c1.get(i, j).clone(),
                        (false, false) => c2.get(i - o1.len(), j - o1.len()).clone(),
                        _ => BigInt::zero(),
                    });
                    (m1.direct_sum(&m2), [o1, o2].concat(), c)
                }
            }
        })
}

/// Every element of `Π Z/m_i`.
pub fn elements(orders: &[u64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &m in orders {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..m as i64).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

pub fn apply(c: &IntMatrix, sign: i64, x: &[i64], orders: &[u64]) -> Vec<i64> {
    // (1 + sign * c) x, reduced coordinatewise.
    (0..x.len())
        .map(|i| {
            let cx: i64 = (0..x.len()).map(|j| i64::try_from(c.get(i, j)).unwrap() * x[j]).sum();
            (x[i] + sign * cx).rem_euclid(orders[i] as i64)
        })
        .collect()
}

/// `ker(1 + s c) / im(1 - s c)` by enumeration, described by `|H[d]|` for `d = 1..=8`.
pub fn brute_tate(c: &IntMatrix, orders: &[u64], s: i64) -> Vec<usize> {
    let all = elements(orders);
    let ker: Vec<&Vec<i64>> = all.iter().filter(|x| apply(c, s, x, orders).iter().all(|&v| v == 0)).collect();
    let im: HashSet<Vec<i64>> = all.iter().map(|x| apply(c, -s, x, orders)).collect();
    (1..=8i64)
        .map(|d| {
            let killed = ker
                .iter()
                .filter(|x| {
                    let dx: Vec<i64> = x.iter().zip(orders).map(|(v, &m)| (d * v).rem_euclid(m as i64)).collect();
                    im.contains(&dx)
                })
                .count();
            killed / im.len()
        })
        .collect()
}

pub fn torsion_profile(g: &FinAbGroup) -> Vec<usize> {
    assert_eq!(g.free_rank(), 0);
    (1..=8u64)
        .map(|d| {
            g.torsion()
                .iter()
                .map(|t| usize::try_from(t.gcd(&BigInt::from(d))).unwrap())
                .product()
        })
        .collect()
}

