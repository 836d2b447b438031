//! Finite models of continuous functions `Z_2^x/{±1} -> Z_2` and the
//! operators behind the order-two Picard element.
//!
//! A function is modelled at level `M` and precision `N`: its values on the
//! orbit `l^0, ..., l^{d-1}` of `(Z/2^M)^x/{±1}`, `d = 2^{M-2}`, taken in
//! `Z/2^N`. Position `j` stands for `k = l^j`, so `f(k/l)` is position `j - 1`
//! and `f(lk)` is position `j + 1`, both read cyclically.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::anderson::{check_generator, DegreeScalar, GradedScalarOperator};
use crate::decimal;
use crate::error::{Error, Result};
use crate::groupcoh::v2;
use crate::intlin::{inverse_mod, local_smith, FinAbGroup, IntMatrix};

/// Levels above this give orbits too long to handle as dense matrices.
pub const MAX_LEVEL: u32 = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitModel {
    pub l: i64,
    pub level: u32,
    pub order: usize,
    /// Canonical representative of `l^j` up to sign, an odd residue in
    /// `[1, 2^{M-1})`.
    pub elements: Vec<u64>,
}

impl OrbitModel {
    pub fn modulus(&self) -> u64 {
        1u64 << self.level
    }

    /// Position of the class of the odd residue `k`.
    pub fn position(&self, k: u64) -> Option<usize> {
        let c = canonical(k % self.modulus(), self.level);
        self.elements.iter().position(|&e| e == c)
    }
}

fn canonical(k: u64, level: u32) -> u64 {
    let m = 1u64 << level;
    if k < m / 2 {
        k
    } else {
        m - k
    }
}

pub fn orbit_model(l: i64, level: u32) -> Result<OrbitModel> {
    if level < 3 {
        return Err(Error::InvalidParameter(format!("level {level} < 3")));
    }
    if level > MAX_LEVEL {
        return Err(Error::InvalidParameter(format!(
            "level {level} exceeds {MAX_LEVEL}"
        )));
    }
    if l % 2 == 0 {
        return Err(Error::InvalidParameter(format!("l = {l} is even")));
    }
    let m = 1u64 << level;
    let order = 1usize << (level - 2);
    let step = l.rem_euclid(m as i64) as u64;
    let mut elements = Vec::with_capacity(order);
    let mut x = 1u64;
    loop {
        let c = canonical(x, level);
        if elements.contains(&c) {
            break;
        }
        elements.push(c);
        x = x * step % m;
    }
    if elements.len() != order {
        return Err(Error::NotAGenerator { l });
    }
    Ok(OrbitModel {
        l,
        level,
        order,
        elements,
    })
}

/// A function on the orbit with values in `Z/2^N`, standing for an element
/// `f ⊗ x` with `x ∈ KO_{4n}`, `n` the weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadicFn {
    pub orbit: OrbitModel,
    pub precision: u32,
    pub weight: i64,
    #[serde(with = "decimal::many")]
    pub values: Vec<BigInt>,
}

impl PadicFn {
    pub fn new(orbit: &OrbitModel, precision: u32, weight: i64, values: Vec<BigInt>) -> Result<Self> {
        check_precision(precision)?;
        if values.len() != orbit.order {
            return Err(Error::Dimension(format!(
                "{} values for an orbit of order {}",
                values.len(),
                orbit.order
            )));
        }
        let m = pow2(precision);
        let values = values.into_iter().map(|v| v.mod_floor(&m)).collect();
        Ok(Self {
            orbit: orbit.clone(),
            precision,
            weight,
            values,
        })
    }

    pub fn zero(orbit: &OrbitModel, precision: u32) -> Self {
        Self {
            orbit: orbit.clone(),
            precision,
            weight: 0,
            values: vec![BigInt::zero(); orbit.order],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }

    /// Smallest 2-adic valuation of a value, `None` for the zero function.
    pub fn valuation(&self) -> Option<u64> {
        self.values.iter().filter_map(v2).min()
    }
}

impl fmt::Display for PadicFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "({}) mod 2^{}", vals.join(", "), self.precision)
    }
}

fn check_precision(n: u32) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("precision must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn pow2(n: u32) -> BigInt {
    BigInt::one() << n
}

/// `l^e mod 2^N` for any integer `e`.
fn pow_mod(l: i64, e: i64, n: u32) -> BigInt {
    let m = pow2(n);
    let base = BigInt::from(l).mod_floor(&m);
    let p = base.modpow(&BigInt::from(e.unsigned_abs()), &m);
    if e >= 0 {
        p
    } else {
        inverse_mod(&p, &m).expect("odd base")
    }
}

/// Matrix of `g(k) = l^2 f(k/l) - f(k)` on value vectors, reduced mod `2^N`.
pub fn alpha_operator(orbit: &OrbitModel, precision: u32) -> Result<IntMatrix> {
    check_precision(precision)?;
    let d = orbit.order;
    let m = pow2(precision);
    let l2 = BigInt::from(orbit.l).pow(2u32);
    let mut a = IntMatrix::zeros(d, d);
    for j in 0..d {
        let prev = (j + d - 1) % d;
        let v = a.get(j, prev) + &l2;
        a.set(j, prev, v);
        let v = a.get(j, j) - 1;
        a.set(j, j, v);
    }
    Ok(a.reduce_mod(&m))
}

/// `v_2(l^{2d} - 1)`: the precision up to which `f(l^j) = l^{2j}` closes up.
pub fn closing_valuation(orbit: &OrbitModel) -> u64 {
    let x = BigInt::from(orbit.l).pow(2 * orbit.order as u32) - 1;
    v2(&x).expect("l^{2d} != 1 for l odd, |l| > 1")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaKernel {
    pub group: FinAbGroup,
    pub generator: PadicFn,
}

/// `ker α` on `(Z/2^N)^d`, with the generator `f(l^j) = l^{2j}` scaled into
/// the kernel.
pub fn alpha_kernel(orbit: &OrbitModel, precision: u32) -> Result<AlphaKernel> {
    let a = alpha_operator(orbit, precision)?;
    let d = orbit.order;
    let m = pow2(precision);
    let group = local_smith(&a, &BigInt::from(2), precision).kernel().0;

    let k = closing_valuation(orbit).min(precision as u64) as u32;
    let scale = pow2(precision - k);
    let values = (0..d)
        .map(|j| pow_mod(orbit.l, 2 * j as i64, precision) * &scale)
        .collect();
    let generator = PadicFn::new(orbit, precision, 0, values)?;
    let image = a.apply(&generator.values)?;
    if !image.iter().all(|v| v.is_multiple_of(&m)) {
        return Err(Error::InconsistentDifferential(
            "kernel generator is not annihilated by α".into(),
        ));
    }
    Ok(AlphaKernel { group, generator })
}

pub fn alpha_cokernel(orbit: &OrbitModel, precision: u32) -> Result<FinAbGroup> {
    let a = alpha_operator(orbit, precision)?;
    Ok(local_smith(&a, &BigInt::from(2), precision).cokernel())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub level: u32,
    pub pulled_back: PadicFn,
    pub solvable: bool,
    pub witness: Option<PadicFn>,
}

/// Pulls `g` back to level `M' ≥ M` and solves `α f = g` there.
pub fn level_transition(g: &PadicFn, level: u32) -> Result<Transition> {
    if level < g.orbit.level {
        return Err(Error::InvalidParameter(format!(
            "target level {level} is below {}",
            g.orbit.level
        )));
    }
    let orbit = orbit_model(g.orbit.l, level)?;
    let d = g.orbit.order;
    let values = (0..orbit.order).map(|j| g.values[j % d].clone()).collect();
    let pulled_back = PadicFn::new(&orbit, g.precision, g.weight, values)?;
    let a = alpha_operator(&orbit, g.precision)?;
    let witness = local_smith(&a, &BigInt::from(2), g.precision)
        .solve(&pulled_back.values)?
        .map(|x| PadicFn::new(&orbit, g.precision, g.weight, x))
        .transpose()?;
    Ok(Transition {
        level,
        pulled_back,
        solvable: witness.is_some(),
        witness,
    })
}

/// `α(f) - g` for the partial sum `f(k) = Σ_{n=1}^{terms} l^{-2n} g(l^n k)`,
/// with its valuation.
pub fn telescoping_residual(g: &PadicFn, terms: usize) -> Result<(PadicFn, Option<u64>)> {
    let orbit = &g.orbit;
    let d = orbit.order;
    let n = g.precision;
    let partial: Vec<BigInt> = (0..d)
        .map(|j| {
            (1..=terms)
                .map(|t| pow_mod(orbit.l, -2 * t as i64, n) * &g.values[(j + t) % d])
                .sum::<BigInt>()
        })
        .collect();
    let a = alpha_operator(orbit, n)?;
    let image = a.apply(&partial)?;
    let residual: Vec<BigInt> = image.iter().zip(&g.values).map(|(x, y)| x - y).collect();
    let residual = PadicFn::new(orbit, n, g.weight, residual)?;
    let val = residual.valuation();
    Ok((residual, val))
}

/// Matrix of `β f(k) = l^2 ψ^{1/l}(f(kl)) - f(k)` at weight `n`, where
/// `ψ^{1/l}` multiplies `KO_{4n}` by `l^{-2n}`.
pub fn beta_operator(orbit: &OrbitModel, precision: u32, weight: i64) -> Result<IntMatrix> {
    check_precision(precision)?;
    let d = orbit.order;
    let c = pow_mod(orbit.l, 2 - 2 * weight, precision);
    let mut b = IntMatrix::zeros(d, d);
    for j in 0..d {
        let next = (j + 1) % d;
        let v = b.get(j, next) + &c;
        b.set(j, next, v);
        let v = b.get(j, j) - 1;
        b.set(j, j, v);
    }
    Ok(b.reduce_mod(&pow2(precision)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelScalar {
    #[serde(with = "decimal::one")]
    pub value: BigInt,
    /// Order of the kernel; the scalar is only defined modulo it.
    #[serde(with = "decimal::one")]
    pub modulus: BigInt,
}

/// The scalar by which `β` acts on `ker α`.
pub fn beta_on_kernel(orbit: &OrbitModel, precision: u32, weight: i64) -> Result<KernelScalar> {
    let kernel = alpha_kernel(orbit, precision)?;
    let b = beta_operator(orbit, precision, weight)?;
    let f = &kernel.generator.values;
    let bf = b.apply(f)?;
    let m = pow2(precision);
    let modulus = kernel.group.order().expect("finite");
    let lead = &f[0];
    let value = (bf[0].mod_floor(&m) / lead).mod_floor(&modulus);
    for (x, y) in bf.iter().zip(f) {
        if !(x - &value * y).is_multiple_of(&m) {
            return Err(Error::NotScalar(format!(
                "β on ker α at weight {weight} is not multiplication by {value}"
            )));
        }
    }
    Ok(KernelScalar { value, modulus })
}

/// Homotopy of `KO_2 ⊕ ...` pieces: `Z_2^rank ⊕ ⊕ Z/2^{e_i}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoAdicGroup {
    pub rank: usize,
    pub torsion: Vec<u64>,
}

impl TwoAdicGroup {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn integers() -> Self {
        Self {
            rank: 1,
            torsion: Vec::new(),
        }
    }

    pub fn cyclic(exponent: u64) -> Self {
        let torsion = if exponent == 0 { Vec::new() } else { vec![exponent] };
        Self { rank: 0, torsion }
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }

    fn sum(mut self, other: Self) -> Self {
        self.rank += other.rank;
        self.torsion.extend(other.torsion);
        self.torsion.sort_unstable();
        self
    }
}

impl fmt::Display for TwoAdicGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z_2".to_string()),
            r => parts.push(format!("Z_2^{r}")),
        }
        parts.extend(self.torsion.iter().map(|e| format!("Z/{}", BigInt::one() << *e)));
        write!(f, "{}", parts.join(" ⊕ "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberDegree {
    pub degree: i64,
    /// `ker(op - 1)` on `KO_j`.
    pub kernel: TwoAdicGroup,
    /// `coker(op - 1)` on `KO_{j+1}`.
    pub cokernel: TwoAdicGroup,
}

fn kernel_cokernel(s: &DegreeScalar) -> Result<(TwoAdicGroup, TwoAdicGroup)> {
    let mut ker = TwoAdicGroup::zero();
    let mut coker = TwoAdicGroup::zero();
    if let Some(q) = &s.free {
        if q.denom().is_even() {
            return Err(Error::InvalidParameter(format!(
                "scalar {q} has an even denominator"
            )));
        }
        match v2(&(q.numer() - q.denom())) {
            None => {
                ker = ker.sum(TwoAdicGroup::integers());
                coker = coker.sum(TwoAdicGroup::integers());
            }
            Some(v) => coker = coker.sum(TwoAdicGroup::cyclic(v)),
        }
    }
    if let Some((c, m)) = &s.torsion {
        let e = v2(m).unwrap_or(0);
        let g = match v2(&(c - 1)) {
            None => e,
            Some(v) => v.min(e),
        };
        ker = ker.sum(TwoAdicGroup::cyclic(g));
        coker = coker.sum(TwoAdicGroup::cyclic(g));
    }
    Ok((ker, coker))
}

/// `π_j` of the fiber of `op - 1`, as the pair (kernel on degree `j`,
/// cokernel on degree `j + 1`). The extension between them is left open.
pub fn fiber_homotopy(op: &GradedScalarOperator, lo: i64, hi: i64) -> Result<Vec<FiberDegree>> {
    let (a, b) = op.window;
    if lo < a || hi + 1 > b {
        return Err(Error::OutsideWindow(format!(
            "degrees [{lo}, {}] not covered by the operator window [{a}, {b}]",
            hi + 1
        )));
    }
    let empty = DegreeScalar::default();
    (lo..=hi)
        .map(|j| {
            let (kernel, _) = kernel_cokernel(op.get(j).unwrap_or(&empty))?;
            let (_, cokernel) = kernel_cokernel(op.get(j + 1).unwrap_or(&empty))?;
            Ok(FiberDegree {
                degree: j,
                kernel,
                cokernel,
            })
        })
        .collect()
}

/// `ψ^q` on `π_* KO` for a rational `q` with odd numerator and denominator.
pub fn psi(q: &BigRational, lo: i64, hi: i64) -> Result<GradedScalarOperator> {
    if q.numer().is_even() || q.denom().is_even() {
        return Err(Error::InvalidParameter(format!("ψ^{q} needs an odd 2-adic unit")));
    }
    let mut scalars = BTreeMap::new();
    for k in lo..=hi {
        let s = match k.rem_euclid(8) {
            0 | 4 => {
                let e = k / 2;
                let p = num_traits::pow(q.clone(), e.unsigned_abs() as usize);
                DegreeScalar {
                    free: Some(if e >= 0 { p } else { p.recip() }),
                    torsion: None,
                }
            }
            1 | 2 => DegreeScalar {
                free: None,
                torsion: Some((BigInt::one(), BigInt::from(2))),
            },
            _ => DegreeScalar::default(),
        };
        scalars.insert(k, s);
    }
    Ok(GradedScalarOperator {
        window: (lo, hi),
        scalars,
    })
}

/// Degrees in `[lo, hi]` where the fibers of `a - 1` and `b - 1` differ.
pub fn fiber_mismatches(
    a: &GradedScalarOperator,
    b: &GradedScalarOperator,
    lo: i64,
    hi: i64,
) -> Result<Vec<i64>> {
    let fa = fiber_homotopy(a, lo, hi)?;
    let fb = fiber_homotopy(b, lo, hi)?;
    Ok(fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.degree)
        .collect())
}

/// The fibers of `ψ^{1/l} - 1` and `ψ^l - 1` agree on `[lo, hi]`.
pub fn p_smash_p_check(l: i64, lo: i64, hi: i64) -> Result<bool> {
    check_generator(l)?;
    let q = BigRational::from_integer(BigInt::from(l));
    let a = psi(&q, lo, hi + 1)?;
    let b = psi(&q.recip(), lo, hi + 1)?;
    Ok(fiber_mismatches(&a, &b, lo, hi)?.is_empty())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KoCheck {
    pub holds: bool,
    pub kernel: FinAbGroup,
    pub diagnostic: Option<String>,
}

/// `ker α ≅ Z/2^N`: the finite shadow of `P ∧ KO ≃ Σ^4 KO`. The operator
/// does not see the weight, so one computation covers every `KO_{4n}`.
pub fn p_smash_ko_check(l: i64, level: u32, precision: u32) -> Result<KoCheck> {
    check_generator(l)?;
    let orbit = orbit_model(l, level)?;
    let kernel = alpha_kernel(&orbit, precision)?.group;
    let expected = FinAbGroup::cyclic(pow2(precision));
    let holds = kernel == expected;
    let diagnostic = (!holds).then(|| {
        format!(
            "level too low: ker α = {kernel} at level {level}, v_2(l^{{2d}} - 1) = {} < {precision}",
            closing_valuation(&orbit)
        )
    });
    Ok(KoCheck {
        holds,
        kernel,
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// All vectors in `(Z/m)^d`.
    fn all_vectors(d: usize, m: i64) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new()];
        for _ in 0..d {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..m).map(move |x| {
                        let mut w = v.clone();
                        w.push(x);
                        w
                    })
                })
                .collect();
        }
        out
    }

    /// Kernel of α by direct evaluation of `l^2 f(l^{j-1}) - f(l^j)`.
    fn brute_kernel(l: i64, level: u32, n: u32) -> Vec<Vec<i64>> {
        let d = 1usize << (level - 2);
        let m = 1i64 << n;
        all_vectors(d, m)
            .into_iter()
            .filter(|f| (0..d).all(|j| (l * l * f[(j + d - 1) % d] - f[j]).rem_euclid(m) == 0))
            .collect()
    }

    fn additive_order(v: &[i64], m: i64) -> i64 {
        (1..=m).find(|k| v.iter().all(|x| (k * x) % m == 0)).unwrap()
    }

    #[test]
    fn orbit_examples() {
        let o = orbit_model(3, 4).unwrap();
        assert_eq!(o.order, 4);
        assert_eq!(o.elements, vec![1, 3, 7, 5]);
        assert_eq!(orbit_model(3, 3).unwrap().elements, vec![1, 3]);
        assert_eq!(orbit_model(5, 5).unwrap().order, 8);
        assert_eq!(orbit_model(7, 4), Err(Error::NotAGenerator { l: 7 }));
        assert_eq!(orbit_model(9, 4), Err(Error::NotAGenerator { l: 9 }));
        assert!(orbit_model(3, 2).is_err());
        assert_eq!(o.position(13), Some(1));
        assert_eq!(o.position(9), Some(2));
    }

    #[test]
    fn alpha_matrix() {
        let o = orbit_model(3, 4).unwrap();
        let a = alpha_operator(&o, 2).unwrap();
        // P - I mod 4 with P the cyclic shift f_{j-1} -> position j.
        let expect = IntMatrix::from_fn(4, 4, |i, j| {
            let p = if j == (i + 3) % 4 { 1 } else { 0 };
            let id = if i == j { 1 } else { 0 };
            BigInt::from(p - id).mod_floor(&BigInt::from(4))
        });
        assert_eq!(a, expect);
        assert_eq!(alpha_operator(&o, 1).unwrap(), expect.reduce_mod(&BigInt::from(2)));
        assert!(alpha_operator(&o, 0).is_err());
    }

    #[test]
    fn kernel_examples() {
        let o = orbit_model(3, 4).unwrap();
        let k = alpha_kernel(&o, 2).unwrap();
        assert_eq!(k.group, FinAbGroup::cyclic(BigInt::from(4)));
        assert_eq!(k.generator.values, ints(&[1, 1, 1, 1]));

        let k = alpha_kernel(&orbit_model(3, 3).unwrap(), 1).unwrap();
        assert_eq!(k.group, FinAbGroup::cyclic(BigInt::from(2)));
        assert_eq!(k.generator.values, ints(&[1, 1]));

        let o = orbit_model(3, 3).unwrap();
        assert_eq!(closing_valuation(&o), 4);
        let k = alpha_kernel(&o, 8).unwrap();
        assert_eq!(k.group, FinAbGroup::cyclic(BigInt::from(16)));
    }

    #[test]
    fn kernel_matches_brute_force() {
        for (l, level, n) in [(3, 3, 1), (3, 3, 2), (3, 4, 1), (3, 4, 2), (5, 3, 2), (5, 4, 1), (3, 3, 3)] {
            let brute = brute_kernel(l, level, n);
            let o = orbit_model(l, level).unwrap();
            let k = alpha_kernel(&o, n).unwrap();
            assert_eq!(k.group.order().unwrap(), BigInt::from(brute.len()), "{l} {level} {n}");
            let expect_exp = closing_valuation(&o).min(n as u64);
            assert_eq!(brute.len(), 1 << expect_exp);
            // Cyclic: some element has order equal to the group order.
            let m = 1i64 << n;
            let max = brute.iter().map(|f| additive_order(f, m)).max().unwrap();
            assert_eq!(max as usize, brute.len());
            let g: Vec<i64> = k.generator.values.iter().map(|v| v.try_into().unwrap()).collect();
            assert!(brute.contains(&g));
            assert_eq!(additive_order(&g, m) as usize, brute.len());
        }
    }

    #[test]
    fn generator_relation() {
        for level in 3..=7 {
            let o = orbit_model(3, level).unwrap();
            for n in 1..=level + 3 {
                let k = alpha_kernel(&o, n).unwrap();
                let m = pow2(n);
                let f = &k.generator.values;
                let d = o.order;
                for j in 0..d {
                    let lhs = &f[(j + 1) % d];
                    let rhs = BigInt::from(9) * &f[j];
                    assert!((lhs - rhs).is_multiple_of(&m));
                }
                let exp = closing_valuation(&o).min(n as u64) as u32;
                assert_eq!(k.group, FinAbGroup::cyclic(pow2(exp)));
            }
        }
    }

    #[test]
    fn lifting_the_exponent() {
        for level in 3..=10u32 {
            let d = 1u32 << (level - 2);
            let x = BigInt::from(3).pow(2 * d) - 1;
            assert_eq!(v2(&x), Some(3 + (level as u64 - 2)));
            assert_eq!(closing_valuation(&orbit_model(3, level).unwrap()), level as u64 + 1);
        }
    }

    #[test]
    fn cokernel_and_transition() {
        let o = orbit_model(3, 3).unwrap();
        assert_eq!(alpha_cokernel(&o, 1).unwrap(), FinAbGroup::cyclic(BigInt::from(2)));
        let g = PadicFn::new(&o, 1, 0, ints(&[1, 0])).unwrap();
        let t = level_transition(&g, 3).unwrap();
        assert!(!t.solvable);
        let t = level_transition(&g, 4).unwrap();
        assert_eq!(t.pulled_back.values, ints(&[1, 0, 1, 0]));
        assert!(t.solvable);
        let w = t.witness.unwrap();
        let a = alpha_operator(&w.orbit, 1).unwrap();
        let img: Vec<BigInt> = a.apply(&w.values).unwrap().iter().map(|v| v.mod_floor(&pow2(1))).collect();
        assert_eq!(img, t.pulled_back.values);

        let o4 = orbit_model(3, 4).unwrap();
        assert_eq!(alpha_cokernel(&o4, 2).unwrap(), FinAbGroup::cyclic(BigInt::from(4)));

        let z = PadicFn::zero(&o4, 2);
        let t = level_transition(&z, 4).unwrap();
        assert!(t.solvable);
        assert!(t.witness.unwrap().is_zero());
        assert!(level_transition(&g, 2).is_err());
    }

    #[test]
    fn every_class_dies_one_level_up() {
        for level in 3..=6u32 {
            let o = orbit_model(3, level).unwrap();
            let a = alpha_operator(&o, 1).unwrap();
            let d = o.order;
            for g in all_vectors(d.min(8), 2) {
                let mut v = g.clone();
                v.resize(d, 0);
                let g = PadicFn::new(&o, 1, 0, ints(&v)).unwrap();
                let here = crate::intlin::solve_mod(&a, &g.values, &pow2(1)).unwrap().is_some();
                // Image of P - I mod 2 is the sum-zero vectors.
                assert_eq!(here, v.iter().sum::<i64>() % 2 == 0);
                assert!(level_transition(&g, level + 1).unwrap().solvable);
            }
        }
    }

    #[test]
    fn telescoping() {
        let o = orbit_model(3, 4).unwrap();
        let n = 5;
        let m = pow2(n);
        let g = PadicFn::new(&o, n, 0, ints(&[3, 0, 7, 1])).unwrap();
        for terms in [1usize, 2, 4, 9] {
            let (r, val) = telescoping_residual(&g, terms).unwrap();
            let c = pow_mod(3, -2 * terms as i64, n);
            for j in 0..4 {
                let expect = (-(&c * &g.values[(j + terms) % 4])).mod_floor(&m);
                assert_eq!(r.values[j], expect);
            }
            assert_eq!(val, Some(0));
        }
        let (r, val) = telescoping_residual(&PadicFn::zero(&o, 3), 3).unwrap();
        assert!(r.is_zero());
        assert_eq!(val, None);
    }

    #[test]
    fn beta_examples() {
        let o = orbit_model(3, 4).unwrap();
        let s = beta_on_kernel(&o, 2, 0).unwrap();
        assert_eq!(s.value, BigInt::zero());
        assert_eq!(s.modulus, BigInt::from(4));
        assert_eq!(beta_on_kernel(&o, 2, 2).unwrap().value, BigInt::zero());
        assert_eq!(beta_on_kernel(&o, 4, 1).unwrap().value, BigInt::from(8));
        assert_eq!(beta_on_kernel(&o, 2, 1).unwrap().value, BigInt::zero());
        for level in 3..=6 {
            let o = orbit_model(3, level).unwrap();
            for n in -3..=3i64 {
                let prec = level + 1;
                let s = beta_on_kernel(&o, prec, n).unwrap();
                let expect = (rational_pow_mod(3, 4 - 2 * n, prec) - BigInt::one()).mod_floor(&pow2(prec));
                assert_eq!(s.value, expect, "level {level} weight {n}");
            }
        }
    }

    /// `l^e mod 2^n` via exact rationals, independent of `pow_mod`.
    fn rational_pow_mod(l: i64, e: i64, n: u32) -> BigInt {
        let q = crate::anderson::rational_power(l, e);
        let m = pow2(n);
        let inv = (1..)
            .map(BigInt::from)
            .find(|x: &BigInt| (x * q.denom() - BigInt::one()).is_multiple_of(&m))
            .unwrap();
        (q.numer() * inv).mod_floor(&m)
    }

    #[test]
    fn sphere_fiber() {
        let op = psi(&BigRational::from_integer(BigInt::from(3)), -10, 10).unwrap();
        let f = fiber_homotopy(&op, -8, 8).unwrap();
        let at = |j: i64| f.iter().find(|x| x.degree == j).unwrap().clone();
        let z2 = TwoAdicGroup::cyclic(1);
        assert_eq!((at(0).kernel, at(0).cokernel), (TwoAdicGroup::integers(), z2.clone()));
        assert_eq!((at(-1).kernel, at(-1).cokernel), (TwoAdicGroup::zero(), TwoAdicGroup::integers()));
        assert_eq!((at(1).kernel, at(1).cokernel), (z2.clone(), z2));
        assert_eq!((at(3).kernel, at(3).cokernel), (TwoAdicGroup::zero(), TwoAdicGroup::cyclic(3)));
        assert_eq!(at(3).cokernel.to_string(), "Z/8");
        // Degree 8n - 1 sees v_2(3^{4n} - 1) = 4 + v_2(n).
        assert_eq!(at(7).cokernel, TwoAdicGroup::cyclic(4));
        assert_eq!(at(-5).cokernel, TwoAdicGroup::cyclic(3));
        assert!(fiber_homotopy(&op, -8, 10).is_err());
    }

    #[test]
    fn even_denominator_rejected() {
        let mut op = psi(&BigRational::from_integer(BigInt::from(3)), 0, 4).unwrap();
        op.scalars.get_mut(&0).unwrap().free = Some(BigRational::new(BigInt::one(), BigInt::from(2)));
        assert!(fiber_homotopy(&op, 0, 3).is_err());
        assert!(psi(&BigRational::from_integer(BigInt::from(2)), 0, 4).is_err());
    }

    #[test]
    fn order_two() {
        assert!(p_smash_p_check(3, -8, 8).unwrap());
        assert!(p_smash_p_check(5, -8, 8).unwrap());
        assert!(p_smash_p_check(7, -8, 8).is_err());
        let a = psi(&BigRational::from_integer(BigInt::from(3)), -8, 9).unwrap();
        let b = psi(&BigRational::from_integer(BigInt::from(9)), -8, 9).unwrap();
        let bad = fiber_mismatches(&a, &b, -8, 8).unwrap();
        assert!(bad.contains(&3));
    }

    #[test]
    fn smash_ko() {
        assert!(p_smash_ko_check(3, 4, 2).unwrap().holds);
        assert!(p_smash_ko_check(3, 9, 4).unwrap().holds);
        let c = p_smash_ko_check(3, 3, 8).unwrap();
        assert!(!c.holds);
        assert!(c.diagnostic.unwrap().starts_with("level too low"));
    }

    #[test]
    fn json_round_trip() {
        let o = orbit_model(3, 4).unwrap();
        let k = alpha_kernel(&o, 2).unwrap();
        let s = serde_json::to_string(&k.generator).unwrap();
        assert!(s.contains("[\"1\",\"1\",\"1\",\"1\"]"));
        let back: PadicFn = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k.generator);
    }
}
