//! Anderson duality on homotopy groups: `Ext^s(π_t X, Z) ⇒ π_{-t-s} I_Z X`
//! with `s ∈ {0, 1}`.

use std::collections::BTreeMap;
use std::fmt;

use log::warn;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::intlin::{ext1_torsion_dual, hom_free_dual, FinAbGroup, GradedAbGroup};

/// `π_k I_Z X = Hom(π_{-k} X, Z) ⊕ Ext(π_{-k-1} X, Z)` on the degrees where
/// both inputs are in the window.
pub fn anderson_dual_homotopy(pi: &GradedAbGroup) -> Result<GradedAbGroup> {
    let (a, b) = pi.window();
    if a >= b {
        return Err(Error::OutsideWindow(format!(
            "window [{a}, {b}] is too small: each output degree needs two input degrees"
        )));
    }
    let mut out = GradedAbGroup::zero(-b, -a - 1);
    for k in -b..=-a - 1 {
        let hom = hom_free_dual(pi.get(-k).expect("in window"));
        let ext = ext1_torsion_dual(pi.get(-k - 1).expect("in window"));
        if !hom.is_zero() && !ext.is_zero() {
            warn!("degree {k}: Hom and Ext both contribute; taking the direct sum");
        }
        out.set(k, hom.direct_sum(&ext))?;
    }
    Ok(out)
}

/// Degrees where Hom and Ext both contribute to the dual.
pub fn colliding_degrees(pi: &GradedAbGroup) -> Vec<i64> {
    let (a, b) = pi.window();
    (-b..=-a - 1)
        .filter(|&k| {
            pi.get(-k).is_some_and(|g| g.free_rank() > 0)
                && pi.get(-k - 1).is_some_and(|g| !g.torsion().is_empty())
        })
        .collect()
}

/// `I_1 X = L_{K(1)} Σ I_Z X`; the localization does not change these groups.
pub fn gross_hopkins_homotopy(pi: &GradedAbGroup) -> Result<GradedAbGroup> {
    Ok(anderson_dual_homotopy(pi)?.shifted(1))
}

/// The unique `t` mod `period` with `m_k ≅ r_{k-t}` wherever both are known.
pub fn detect_shift_free_rank_one(
    m: &GradedAbGroup,
    r: &GradedAbGroup,
    period: i64,
) -> Result<i64> {
    if period <= 0 {
        return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
    }
    let (ma, mb) = m.window();
    let (ra, rb) = r.window();
    let mut candidates = Vec::new();
    for t in 0..period {
        let lo = ma.max(ra + t);
        let hi = mb.min(rb + t);
        if hi - lo + 1 < period {
            return Err(Error::OutsideWindow(format!(
                "shift {t} compares only degrees [{lo}, {hi}], less than one period"
            )));
        }
        if (lo..=hi).all(|k| m.get(k) == r.get(k - t)) {
            candidates.push(t);
        }
    }
    match candidates.as_slice() {
        [] => Err(Error::NoShift),
        [t] => Ok(*t),
        _ => Err(Error::AmbiguousShift(candidates)),
    }
}

/// Graded group repeating `pattern` with period `pattern.len()`, starting at degree 0.
pub fn periodic(lo: i64, hi: i64, pattern: &[FinAbGroup]) -> GradedAbGroup {
    let p = pattern.len() as i64;
    GradedAbGroup::from_fn(lo, hi, |k| pattern[k.rem_euclid(p) as usize].clone())
}

pub fn ko_pattern() -> Vec<FinAbGroup> {
    let z = FinAbGroup::free(1);
    let z2 = FinAbGroup::cyclic(2);
    let o = FinAbGroup::zero();
    vec![z.clone(), z2.clone(), z2, o.clone(), z, o.clone(), o.clone(), o]
}

pub fn ku_pattern() -> Vec<FinAbGroup> {
    vec![FinAbGroup::free(1), FinAbGroup::zero()]
}

pub fn ko_groups(lo: i64, hi: i64) -> GradedAbGroup {
    periodic(lo, hi, &ko_pattern())
}

pub fn ku_groups(lo: i64, hi: i64) -> GradedAbGroup {
    periodic(lo, hi, &ku_pattern())
}

/// Action of an operator in one degree.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DegreeScalar {
    /// Scalar on the free part; the denominator is odd.
    pub free: Option<BigRational>,
    /// `(scalar, order)` on a cyclic torsion part, the scalar reduced mod the order.
    pub torsion: Option<(BigInt, BigInt)>,
}

impl fmt::Display for DegreeScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.free, &self.torsion) {
            (None, None) => write!(f, "0"),
            (Some(q), None) => write!(f, "{q}"),
            (None, Some((s, m))) => write!(f, "{s} mod {m}"),
            (Some(q), Some((s, m))) => write!(f, "{q} ⊕ {s} mod {m}"),
        }
    }
}

/// Degreewise scalar operator on a graded group such as `π_* KO`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedScalarOperator {
    pub window: (i64, i64),
    pub scalars: BTreeMap<i64, DegreeScalar>,
}

impl GradedScalarOperator {
    pub fn get(&self, k: i64) -> Option<&DegreeScalar> {
        self.scalars.get(&k)
    }

    fn validate(&self) -> Result<()> {
        for (k, s) in &self.scalars {
            if let Some(q) = &s.free {
                if q.denom().is_even() {
                    return Err(Error::InvalidParameter(format!(
                        "degree {k}: scalar {q} has an even denominator"
                    )));
                }
            }
            if let Some((v, m)) = &s.torsion {
                if !m.is_positive() || v.is_negative() || v >= m {
                    return Err(Error::InvalidParameter(format!(
                        "degree {k}: torsion scalar {v} mod {m} is not reduced"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `l ≡ ±3 mod 8`, so that `l` topologically generates `Z_2^x/{±1}`.
pub fn check_generator(l: i64) -> Result<()> {
    if matches!(l.rem_euclid(8), 3 | 5) {
        Ok(())
    } else {
        Err(Error::NotAGenerator { l })
    }
}

/// `l^e` as a rational number, for any integer `e`.
pub fn rational_power(l: i64, e: i64) -> BigRational {
    let base = BigRational::from_integer(BigInt::from(l));
    if e >= 0 {
        num_traits::pow(base, e as usize)
    } else {
        num_traits::pow(base.recip(), (-e) as usize)
    }
}

/// `ψ^l` on `π_* KO`: `l^{2n}` on `KO_{4n}`, the identity on the `Z/2`s.
pub fn psi_ko(l: i64, lo: i64, hi: i64) -> Result<GradedScalarOperator> {
    check_generator(l)?;
    let mut scalars = BTreeMap::new();
    for k in lo..=hi {
        let s = match k.rem_euclid(8) {
            0 | 4 => DegreeScalar {
                free: Some(rational_power(l, k / 2)),
                torsion: None,
            },
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

/// The operator `I_Z ψ^l` on `I_Z KO ≅ Σ^4 KO`, read in `KO` degrees; this
/// is `l^{-2} ψ^{1/l}`.
///
/// The dual acts on `Hom(π_{-d})` and `Ext(π_{-d-1})` in degree `d` by the
/// same scalars, and `KO`-degree `e` is dual degree `e + 4`.
pub fn dual_adams_operation(op: &GradedScalarOperator, l: i64) -> Result<GradedScalarOperator> {
    check_generator(l)?;
    op.validate()?;
    let (a, b) = op.window;
    let (lo, hi) = (-b - 4, -a - 5);
    if lo > hi {
        return Err(Error::OutsideWindow(format!("operator window [{a}, {b}] is too small")));
    }
    let mut scalars = BTreeMap::new();
    for e in lo..=hi {
        let free = op.get(-e - 4).and_then(|s| s.free.clone());
        let torsion = op.get(-e - 5).and_then(|s| s.torsion.clone());
        scalars.insert(e, DegreeScalar { free, torsion });
    }
    Ok(GradedScalarOperator {
        window: (lo, hi),
        scalars,
    })
}

/// 2-adic valuation of a nonzero rational.
pub fn v2_rational(q: &BigRational) -> Option<i64> {
    if q.is_zero() {
        return None;
    }
    let v = |x: &BigInt| x.trailing_zeros().expect("nonzero") as i64;
    Some(v(q.numer()) - v(q.denom()))
}
