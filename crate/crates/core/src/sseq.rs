//! Bigraded spectral sequences in Adams indexing.
//!
//! A class of filtration `s` and internal degree `t` sits at
//! `(stem, filtration) = (t - s, s)` and `d_r` has bidegree `(-1, r)`.
//!
//! Every slot keeps the basis ("cover") of the page the sequence started on.
//! Later pages are subquotients `Z_r / B_r` of that cover, and differentials
//! are matrices on cover coordinates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::{Error, Result};
use crate::intlin::{cokernel, preimage, FinAbGroup, GradedAbGroup, IntMatrix, Lattice, Subquotient};

pub type Position = (i64, i64);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub stem: i64,
    pub filtration: i64,
    /// Additive order, 0 for infinite. Only 0 and 2 are supported.
    pub order: u32,
    pub invertible: bool,
}

impl Generator {
    pub fn new(name: &str, stem: i64, filtration: i64) -> Self {
        Generator {
            name: name.to_string(),
            stem,
            filtration,
            order: 0,
            invertible: false,
        }
    }

    pub fn with_order(mut self, order: u32) -> Self {
        self.order = order;
        self
    }

    pub fn invertible(mut self) -> Self {
        self.invertible = true;
        self
    }

    pub fn internal_degree(&self) -> i64 {
        self.stem + self.filtration
    }
}

/// Generators of a graded-commutative ring plus nilpotence relations `g^k = 0`.
/// Order relations (`2η = 0`) are carried by [`Generator::order`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub generators: Vec<Generator>,
    pub nilpotent: Vec<(String, u32)>,
}

impl Presentation {
    pub fn new(generators: Vec<Generator>) -> Self {
        Presentation {
            generators,
            nilpotent: Vec::new(),
        }
    }

    pub fn with_nilpotent(mut self, name: &str, power: u32) -> Self {
        self.nilpotent.push((name.to_string(), power));
        self
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    fn nilpotence_of(&self, i: usize) -> Option<u32> {
        let name = &self.generators[i].name;
        self.nilpotent
            .iter()
            .filter(|(n, _)| n == name)
            .map(|(_, k)| *k)
            .min()
    }

    /// Whether the exponent vector names a nonzero monomial.
    fn is_monomial(&self, e: &[i64]) -> bool {
        e.iter().enumerate().all(|(i, &k)| {
            let g = &self.generators[i];
            (g.invertible || k >= 0) && self.nilpotence_of(i).is_none_or(|p| k < p as i64)
        })
    }

    fn degree(&self, e: &[i64]) -> Position {
        e.iter()
            .zip(&self.generators)
            .fold((0, 0), |(n, s), (&k, g)| (n + k * g.stem, s + k * g.filtration))
    }

    fn monomial_order(&self, e: &[i64]) -> u32 {
        let torsion = self
            .generators
            .iter()
            .zip(e)
            .any(|(g, &k)| g.order == 2 && (k != 0 || g.invertible));
        if torsion {
            2
        } else {
            0
        }
    }

    pub fn monomial_label(&self, e: &[i64]) -> String {
        let mut out = String::new();
        for (g, &k) in self.generators.iter().zip(e) {
            match k {
                0 => {}
                1 => out.push_str(&g.name),
                k => out.push_str(&format!("{}^{}", g.name, k)),
            }
        }
        if out.is_empty() {
            out.push('1');
        }
        out
    }
}

/// Rectangle of positions, inclusive on both ends. `floor` and `ceiling`
/// mark filtration bounds beyond which the spectral sequence is genuinely zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub stems: (i64, i64),
    pub filtrations: (i64, i64),
    pub floor: bool,
    pub ceiling: bool,
}

impl Window {
    pub fn new(stems: (i64, i64), filtrations: (i64, i64)) -> Self {
        Window {
            stems,
            filtrations,
            floor: false,
            ceiling: false,
        }
    }

    pub fn with_floor(mut self) -> Self {
        self.floor = true;
        self
    }

    pub fn with_ceiling(mut self) -> Self {
        self.ceiling = true;
        self
    }

    pub fn contains(&self, (n, s): Position) -> bool {
        self.stems.0 <= n && n <= self.stems.1 && self.filtrations.0 <= s && s <= self.filtrations.1
    }

    pub fn covers(&self, other: &Window) -> bool {
        self.stems.0 <= other.stems.0
            && other.stems.1 <= self.stems.1
            && self.filtrations.0 <= other.filtrations.0
            && other.filtrations.1 <= self.filtrations.1
    }

    pub fn is_empty(&self) -> bool {
        self.stems.0 > self.stems.1 || self.filtrations.0 > self.filtrations.1
    }

    /// Positions whose value on the next page is determined by this page
    /// after a `d_r`.
    fn shrink(&self, r: i64) -> Window {
        Window {
            stems: (self.stems.0 + 1, self.stems.1 - 1),
            filtrations: (
                self.filtrations.0 + if self.floor { 0 } else { r },
                self.filtrations.1 - if self.ceiling { 0 } else { r },
            ),
            floor: self.floor,
            ceiling: self.ceiling,
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stems [{}, {}] x filtrations [{}, {}]",
            self.stems.0, self.stems.1, self.filtrations.0, self.filtrations.1
        )
    }
}

/// One basis element of the starting page.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    #[serde(with = "decimal::one")]
    pub order: BigInt,
    pub exponents: Option<Vec<i64>>,
}

impl Cell {
    pub fn new(label: &str, order: impl Into<BigInt>) -> Self {
        Cell {
            label: label.to_string(),
            order: order.into(),
            exponents: None,
        }
    }
}

/// A generator of one cyclic summand on the current page.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Class {
    pub label: String,
    #[serde(with = "decimal::one")]
    pub order: BigInt,
    /// Representative in cover coordinates.
    #[serde(with = "decimal::many")]
    pub rep: Vec<BigInt>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub cover: Vec<Cell>,
    cycles: IntMatrix,
    boundaries: IntMatrix,
    pub group: FinAbGroup,
    pub classes: Vec<Class>,
}

impl Slot {
    fn initial(cover: Vec<Cell>) -> Slot {
        let n = cover.len();
        let orders: Vec<BigInt> = cover.iter().map(|c| c.order.clone()).collect();
        let mut slot = Slot {
            cover,
            cycles: IntMatrix::identity(n),
            boundaries: IntMatrix::diagonal(n, n, &orders),
            group: FinAbGroup::zero(),
            classes: Vec::new(),
        };
        slot.refresh().expect("initial slot is consistent");
        slot
    }

    fn subquotient(&self) -> Result<Subquotient> {
        Subquotient::new(&self.cycles, &self.boundaries)
    }

    fn refresh(&mut self) -> Result<()> {
        let sq = self.subquotient()?;
        self.group = sq.group().clone();
        self.classes = sq
            .generators()
            .into_iter()
            .map(|g| {
                let mut rep: Vec<BigInt> = g
                    .vector
                    .iter()
                    .zip(&self.cover)
                    .map(|(x, c)| if c.order.is_zero() { x.clone() } else { x.mod_floor(&c.order) })
                    .collect();
                if rep.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
                    rep.iter_mut().for_each(|x| *x = -x.clone());
                }
                Class {
                    label: combination_label(&rep, &self.cover),
                    order: g.order,
                    rep,
                }
            })
            .collect();
        Ok(())
    }

    pub fn cycles(&self) -> &IntMatrix {
        &self.cycles
    }

    pub fn boundaries(&self) -> &IntMatrix {
        &self.boundaries
    }

    /// Coordinates of a cycle (cover coordinates) in terms of [`Slot::classes`].
    pub fn class_coords(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        self.subquotient()?.class_coords(v)
    }
}

fn combination_label(rep: &[BigInt], cover: &[Cell]) -> String {
    let mut out = String::new();
    for (c, cell) in rep.iter().zip(cover) {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        let body = if cell.label == "1" {
            mag.to_string()
        } else if mag.is_one() {
            cell.label.clone()
        } else {
            format!("{mag}{}", cell.label)
        };
        if out.is_empty() {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

mod position_map {
    use super::Position;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer, T: Serialize>(
        m: &BTreeMap<Position, T>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter().map(|((n, f), v)| (n, f, v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: Deserialize<'de>>(
        d: D,
    ) -> Result<BTreeMap<Position, T>, D::Error> {
        let v: Vec<(i64, i64, T)> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|(n, f, t)| ((n, f), t)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub number: u32,
    /// Page the covers belong to.
    pub start: u32,
    pub window: Window,
    /// Region where the page agrees with the unbounded spectral sequence.
    pub trusted: Window,
    pub presentation: Option<Presentation>,
    #[serde(with = "position_map")]
    slots: BTreeMap<Position, Slot>,
}

impl Page {
    /// Starting page with the given covers; positions outside the window
    /// and empty covers are dropped.
    pub fn from_cells(
        number: u32,
        window: Window,
        cells: impl IntoIterator<Item = (Position, Vec<Cell>)>,
    ) -> Page {
        let mut slots = BTreeMap::new();
        for (pos, cover) in cells {
            if cover.is_empty() || !window.contains(pos) {
                continue;
            }
            slots.insert(pos, Slot::initial(cover));
        }
        Page {
            number,
            start: number,
            window,
            trusted: window,
            presentation: None,
            slots,
        }
    }

    pub fn slot(&self, pos: Position) -> Option<&Slot> {
        self.slots.get(&pos)
    }

    pub fn slots(&self) -> impl Iterator<Item = (Position, &Slot)> {
        self.slots.iter().map(|(p, s)| (*p, s))
    }

    pub fn group(&self, pos: Position) -> FinAbGroup {
        self.slots
            .get(&pos)
            .map(|s| s.group.clone())
            .unwrap_or_else(FinAbGroup::zero)
    }

    /// Positions with a nonzero group.
    pub fn support(&self) -> Vec<Position> {
        self.slots
            .iter()
            .filter(|(_, s)| !s.group.is_zero())
            .map(|(p, _)| *p)
            .collect()
    }

    pub fn is_zero_on(&self, w: &Window) -> bool {
        self.support().into_iter().all(|p| !w.contains(p))
    }

    pub fn target(&self, (n, s): Position) -> Position {
        (n - 1, s + self.number as i64)
    }

    fn cover_len(&self, pos: Position) -> usize {
        self.slots.get(&pos).map_or(0, |s| s.cover.len())
    }

    /// Index of the cover cell with the given exponents.
    pub fn find_monomial(&self, pos: Position, e: &[i64]) -> Option<usize> {
        let slot = self.slots.get(&pos)?;
        slot.cover
            .iter()
            .position(|c| c.exponents.as_deref() == Some(e))
    }

    /// Pairs of classes related by multiplication by the generator with the
    /// given index, as `((position, class), (position, class))`.
    pub fn multiplication_lines(
        &self,
        gen: usize,
        degree: Position,
    ) -> Vec<((Position, usize), (Position, usize))> {
        let mut out = Vec::new();
        for (&pos, slot) in &self.slots {
            let tpos = (pos.0 + degree.0, pos.1 + degree.1);
            let Some(tslot) = self.slots.get(&tpos) else {
                continue;
            };
            for (i, class) in slot.classes.iter().enumerate() {
                let mut w = vec![BigInt::zero(); tslot.cover.len()];
                for (c, cell) in class.rep.iter().zip(&slot.cover) {
                    if c.is_zero() {
                        continue;
                    }
                    let Some(e) = &cell.exponents else { continue };
                    let mut e2 = e.clone();
                    if gen >= e2.len() {
                        continue;
                    }
                    e2[gen] += 1;
                    if let Some(j) = self.find_monomial(tpos, &e2) {
                        w[j] += c;
                    }
                }
                let Ok(coords) = tslot.class_coords(&w) else { continue };
                for (j, x) in coords.iter().enumerate() {
                    if !x.is_zero() {
                        out.push(((pos, i), (tpos, j)));
                    }
                }
            }
        }
        out
    }

    /// Class-level arrows of a differential on this page.
    pub fn arrows(&self, d: &Differential) -> Result<Vec<((Position, usize), (Position, usize))>> {
        let mut out = Vec::new();
        for (&pos, m) in &d.maps {
            let (Some(src), Some(tgt)) = (self.slots.get(&pos), self.slots.get(&self.target(pos)))
            else {
                continue;
            };
            for (i, class) in src.classes.iter().enumerate() {
                let image = m.apply(&class.rep)?;
                for (j, x) in tgt.class_coords(&image)?.iter().enumerate() {
                    if !x.is_zero() {
                        out.push(((pos, i), (self.target(pos), j)));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Generators of the ring and the value of `d_r` on each, extended by the
/// Leibniz rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentialRule {
    pub page: u32,
    pub assignments: Vec<(String, Vec<Term>)>,
}

/// `coefficient * monomial`, the monomial given as generator powers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: i64,
    pub monomial: Vec<(String, i64)>,
}

impl DifferentialRule {
    pub fn new(page: u32) -> Self {
        DifferentialRule {
            page,
            assignments: Vec::new(),
        }
    }

    /// `d_r(gen) = Σ c · monomial`.
    pub fn assign(mut self, gen: &str, terms: &[(i64, &[(&str, i64)])]) -> Self {
        let terms = terms
            .iter()
            .map(|(c, m)| Term {
                coefficient: *c,
                monomial: m.iter().map(|(g, k)| (g.to_string(), *k)).collect(),
            })
            .collect();
        self.assignments.push((gen.to_string(), terms));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

impl fmt::Display for DifferentialRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (g, terms) in &self.assignments {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "d{}({}) = ", self.page, g)?;
            if terms.is_empty() {
                write!(f, "0")?;
            }
            for (i, t) in terms.iter().enumerate() {
                let mono: String = t
                    .monomial
                    .iter()
                    .filter(|(_, k)| *k != 0)
                    .map(|(g, k)| if *k == 1 { g.clone() } else { format!("{g}^{k}") })
                    .collect();
                let mono = if mono.is_empty() { "1".to_string() } else { mono };
                let mag = t.coefficient.abs();
                let body = if mag == 1 { mono } else { format!("{mag}{mono}") };
                match (i, t.coefficient < 0) {
                    (0, false) => write!(f, "{body}")?,
                    (0, true) => write!(f, "-{body}")?,
                    (_, false) => write!(f, " + {body}")?,
                    (_, true) => write!(f, " - {body}")?,
                }
            }
        }
        Ok(())
    }
}

/// `d_r` as matrices on cover coordinates, keyed by source position.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Differential {
    pub page: u32,
    #[serde(with = "position_map")]
    maps: BTreeMap<Position, IntMatrix>,
}

impl Differential {
    pub fn new(page: u32) -> Self {
        Differential {
            page,
            maps: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, source: Position, matrix: IntMatrix) {
        self.maps.insert(source, matrix);
    }

    pub fn get(&self, source: Position) -> Option<&IntMatrix> {
        self.maps.get(&source)
    }

    pub fn maps(&self) -> impl Iterator<Item = (Position, &IntMatrix)> {
        self.maps.iter().map(|(p, m)| (*p, m))
    }

    pub fn target(&self, (n, s): Position) -> Position {
        (n - 1, s + self.page as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.maps.values().all(|m| m.is_zero())
    }

    /// Adds `value` to one entry, creating a zero matrix of the given shape if needed.
    fn add_entry(&mut self, source: Position, shape: (usize, usize), i: usize, j: usize, value: BigInt) {
        let m = self
            .maps
            .entry(source)
            .or_insert_with(|| IntMatrix::zeros(shape.0, shape.1));
        let v = m.get(i, j) + value;
        m.set(i, j, v);
    }
}

pub fn page_from_presentation(pres: &Presentation, window: Window, number: u32) -> Result<Page> {
    for g in &pres.generators {
        if g.order != 0 && g.order != 2 {
            return Err(Error::InvalidPresentation(format!(
                "generator {} has order {}; only 0 and 2 are supported",
                g.name, g.order
            )));
        }
        if g.stem == 0 && g.filtration == 0 {
            return Err(Error::InvalidPresentation(format!(
                "generator {} has bidegree (0, 0)",
                g.name
            )));
        }
    }
    let mut names = BTreeSet::new();
    for g in &pres.generators {
        if !names.insert(g.name.as_str()) {
            return Err(Error::InvalidPresentation(format!("duplicate generator {}", g.name)));
        }
    }
    for (name, k) in &pres.nilpotent {
        if pres.index_of(name).is_none() {
            return Err(Error::InvalidPresentation(format!("relation mentions unknown {name}")));
        }
        if *k == 0 {
            return Err(Error::InvalidPresentation(format!("{name}^0 = 0 kills everything")));
        }
    }
    let bound = window.stems.0.abs().max(window.stems.1.abs())
        + window.filtrations.0.abs().max(window.filtrations.1.abs())
        + 1;
    let k = pres.generators.len();
    let ranges: Vec<(i64, i64)> = pres
        .generators
        .iter()
        .map(|g| (if g.invertible { -bound } else { 0 }, bound))
        .collect();
    let mut cells: BTreeMap<Position, Vec<Cell>> = BTreeMap::new();
    let mut e: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        if pres.is_monomial(&e) {
            let pos = pres.degree(&e);
            if window.contains(pos) {
                if e.iter().any(|x| x.abs() == bound) {
                    return Err(Error::InvalidPresentation(format!(
                        "infinitely many monomials reach {pos:?}"
                    )));
                }
                let mut cell = Cell::new(&pres.monomial_label(&e), pres.monomial_order(&e));
                cell.exponents = Some(e.clone());
                cells.entry(pos).or_default().push(cell);
            }
        }
        // odometer
        let mut i = 0;
        while i < k {
            if e[i] < ranges[i].1 {
                e[i] += 1;
                break;
            }
            e[i] = ranges[i].0;
            i += 1;
        }
        if i == k {
            break;
        }
    }
    let mut page = Page::from_cells(number, window, cells);
    page.presentation = Some(pres.clone());
    Ok(page)
}

/// Matrices of `d_r` on the cover of `page`, from the rule by the Leibniz
/// rule `d(xy) = d(x)y + (-1)^{t(x)} x d(y)` with `t` the internal degree.
pub fn leibniz_extend(rule: &DifferentialRule, page: &Page) -> Result<Differential> {
    if rule.page != page.number {
        return Err(Error::InvalidParameter(format!(
            "rule is for E_{} but the page is E_{}",
            rule.page, page.number
        )));
    }
    let pres = page
        .presentation
        .as_ref()
        .ok_or_else(|| Error::Unsupported("Leibniz extension needs a presented page".into()))?;
    let r = rule.page as i64;
    let k = pres.generators.len();
    // d(g_i) as (coefficient, exponent vector)
    let mut values: Vec<Vec<(BigInt, Vec<i64>)>> = vec![Vec::new(); k];
    for (name, terms) in &rule.assignments {
        let i = pres
            .index_of(name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown generator {name}")))?;
        let g = &pres.generators[i];
        let want = (g.stem - 1, g.filtration + r);
        for t in terms {
            let mut e = vec![0; k];
            for (h, p) in &t.monomial {
                let j = pres
                    .index_of(h)
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown generator {h}")))?;
                e[j] += p;
            }
            if pres.degree(&e) != want {
                return Err(Error::InvalidParameter(format!(
                    "d{r}({name}) must lie in bidegree {want:?}, got {:?}",
                    pres.degree(&e)
                )));
            }
            if t.coefficient != 0 {
                values[i].push((BigInt::from(t.coefficient), e));
            }
        }
    }
    let mut d = Differential::new(rule.page);
    for (&pos, slot) in &page.slots {
        let tpos = page.target(pos);
        let in_window = page.window.contains(tpos);
        let rows = page.cover_len(tpos);
        let mut m = IntMatrix::zeros(rows, slot.cover.len());
        let mut nonzero = false;
        for (col, cell) in slot.cover.iter().enumerate() {
            let e = cell
                .exponents
                .as_ref()
                .ok_or_else(|| Error::Unsupported("cover cell without exponents".into()))?;
            let mut sign_degree = 0i64;
            for i in 0..k {
                if e[i] != 0 && !values[i].is_empty() {
                    let sign = if sign_degree.rem_euclid(2) == 0 { 1 } else { -1 };
                    for (c, f) in &values[i] {
                        let mut e2: Vec<i64> = e.iter().zip(f).map(|(a, b)| a + b).collect();
                        e2[i] -= 1;
                        let coeff: BigInt = c * e[i] * sign;
                        if coeff.is_zero() || !pres.is_monomial(&e2) {
                            continue;
                        }
                        if !in_window {
                            continue;
                        }
                        let row = page.find_monomial(tpos, &e2).ok_or_else(|| {
                            Error::InconsistentDifferential(format!(
                                "d{r}({}) reaches {} outside {tpos:?}",
                                cell.label,
                                pres.monomial_label(&e2)
                            ))
                        })?;
                        let v = m.get(row, col) + coeff;
                        m.set(row, col, v);
                        nonzero = true;
                    }
                }
                sign_degree += e[i] * pres.generators[i].internal_degree();
            }
        }
        if nonzero {
            d.insert(pos, m);
        }
    }
    Ok(d)
}

/// `E_{r+1} = H(E_r, d_r)`.
pub fn turn_page(page: &Page, d: &Differential) -> Result<Page> {
    if d.page != page.number {
        return Err(Error::InvalidParameter(format!(
            "differential d{} applied to E_{}",
            d.page, page.number
        )));
    }
    let mut next = page.clone();
    let mut images: BTreeMap<Position, Vec<IntMatrix>> = BTreeMap::new();
    for (pos, m) in &d.maps {
        let pos = *pos;
        let Some(src) = page.slots.get(&pos) else {
            if m.cols() != 0 {
                return Err(Error::Dimension(format!("d{} from empty slot {pos:?}", d.page)));
            }
            continue;
        };
        let tpos = page.target(pos);
        if m.cols() != src.cover.len() || m.rows() != page.cover_len(tpos) {
            return Err(Error::Dimension(format!(
                "d{} at {pos:?} is {}x{}, expected {}x{}",
                d.page,
                m.rows(),
                m.cols(),
                page.cover_len(tpos),
                src.cover.len()
            )));
        }
        let Some(tgt) = page.slots.get(&tpos) else {
            continue;
        };
        let image = m.mul(&src.cycles)?;
        let tcycles = Lattice::span(&tgt.cycles);
        if image.columns().iter().any(|v| !tcycles.contains(v)) {
            return Err(Error::InconsistentDifferential(format!(
                "d{} at {pos:?} does not land in cycles",
                d.page
            )));
        }
        let tbound = Lattice::span(&tgt.boundaries);
        let moved = m.mul(&src.boundaries)?;
        if moved.columns().iter().any(|v| !tbound.contains(v)) {
            return Err(Error::InconsistentDifferential(format!(
                "d{} at {pos:?} is not defined on E_{}",
                d.page, d.page
            )));
        }
        // d∘d = 0
        if let (Some(m2), Some(tgt2)) = (d.maps.get(&tpos), page.slots.get(&page.target(tpos))) {
            let twice = m2.mul(&image)?;
            let b2 = Lattice::span(&tgt2.boundaries);
            if twice.columns().iter().any(|v| !b2.contains(v)) {
                return Err(Error::InconsistentDifferential(format!(
                    "d{0}∘d{0} is nonzero starting at {pos:?}",
                    d.page
                )));
            }
        }
        let keep = preimage(&image, &tgt.boundaries)?;
        let slot = next.slots.get_mut(&pos).expect("present");
        slot.cycles = src.cycles.mul(&keep)?;
        images.entry(tpos).or_default().push(image);
    }
    for (tpos, ims) in images {
        let slot = next.slots.get_mut(&tpos).expect("present");
        for im in ims {
            slot.boundaries = slot.boundaries.hstack(&im)?;
        }
    }
    for slot in next.slots.values_mut() {
        slot.refresh()?;
    }
    next.number += 1;
    if !d.is_zero() {
        next.trusted = page.trusted.shrink(d.page as i64);
    }
    Ok(next)
}

/// Pages `E_start ..= E_up_to` with the differential used on each.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub pages: Vec<Page>,
    pub differentials: Vec<Differential>,
}

impl Run {
    pub fn last(&self) -> &Page {
        self.pages.last().expect("nonempty run")
    }

    pub fn page(&self, r: u32) -> Option<&Page> {
        self.pages.iter().find(|p| p.number == r)
    }

    pub fn differential(&self, r: u32) -> Option<&Differential> {
        self.differentials.iter().find(|d| d.page == r)
    }
}

/// Iterates Leibniz extension and page turning; pages without a rule get the
/// zero differential.
pub fn run(page: &Page, rules: &[DifferentialRule], up_to: u32) -> Result<Run> {
    let mut pages = vec![page.clone()];
    let mut differentials = Vec::new();
    while pages.last().expect("nonempty").number < up_to {
        let current = pages.last().expect("nonempty");
        let d = match rules.iter().find(|r| r.page == current.number) {
            Some(rule) => leibniz_extend(rule, current)?,
            None => Differential::new(current.number),
        };
        let next = turn_page(current, &d)?;
        differentials.push(d);
        pages.push(next);
    }
    Ok(Run {
        pages,
        differentials,
    })
}

/// `p · x = y` in the abutment, where `x` and `y` are classes of the final
/// page in the same stem and `y` has higher filtration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionRecord {
    pub stem: i64,
    pub multiplier: i64,
    pub source_filtration: i64,
    pub source_index: usize,
    pub target_filtration: i64,
    pub target_index: usize,
}

impl ExtensionRecord {
    pub fn new(stem: i64, multiplier: i64, source_filtration: i64, target_filtration: i64) -> Self {
        ExtensionRecord {
            stem,
            multiplier,
            source_filtration,
            source_index: 0,
            target_filtration,
            target_index: 0,
        }
    }
}

impl fmt::Display for ExtensionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}·({}, {}) = ({}, {})",
            self.multiplier, self.stem, self.source_filtration, self.stem, self.target_filtration
        )
    }
}

/// A starting page with all of its differentials as matrices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralSequence {
    pub initial: Page,
    pub differentials: Vec<Differential>,
    pub extensions: Vec<ExtensionRecord>,
}

impl SpectralSequence {
    pub fn run(&self, up_to: u32) -> Result<Run> {
        let mut pages = vec![self.initial.clone()];
        let mut differentials = Vec::new();
        while pages.last().expect("nonempty").number < up_to {
            let current = pages.last().expect("nonempty");
            let d = self
                .differentials
                .iter()
                .find(|d| d.page == current.number)
                .cloned()
                .unwrap_or_else(|| Differential::new(current.number));
            let next = turn_page(current, &d)?;
            differentials.push(d);
            pages.push(next);
        }
        Ok(Run {
            pages,
            differentials,
        })
    }
}

/// Inverts a generator of order 2 on a starting page built from a presentation.
pub fn localize_generator(page: &Page, gen: &str, window: Window) -> Result<Page> {
    let pres = page
        .presentation
        .as_ref()
        .ok_or_else(|| Error::Unsupported("localization needs a presented page".into()))?;
    if page.number != page.start {
        return Err(Error::Unsupported("localization of a later page".into()));
    }
    let i = pres
        .index_of(gen)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown generator {gen}")))?;
    let g = &pres.generators[i];
    if g.order == 0 && !g.invertible {
        return Err(Error::Unsupported(format!(
            "inverting the free generator {gen} is not supported"
        )));
    }
    let mut local = pres.clone();
    local.generators[i].invertible = true;
    if pres.nilpotence_of(i).is_some() {
        let mut page = Page::from_cells(page.number, window, Vec::new());
        page.presentation = Some(local);
        return Ok(page);
    }
    page_from_presentation(&local, window, page.number)
}

/// Assembles each trusted stem from the filtration column, honoring the
/// extension records.
pub fn extract_abutment(page: &Page, extensions: &[ExtensionRecord]) -> Result<GradedAbGroup> {
    let (lo, hi) = page.trusted.stems;
    if lo > hi {
        return Err(Error::OutsideWindow("no trusted stems".into()));
    }
    let mut seen = BTreeSet::new();
    for e in extensions {
        if !seen.insert((e.stem, e.source_filtration, e.source_index)) {
            return Err(Error::Extension(format!("two records for the source of {e}")));
        }
    }
    let (flo, fhi) = page.trusted.filtrations;
    let mut out = GradedAbGroup::zero(lo, hi);
    for n in lo..=hi {
        let mut classes: Vec<(i64, usize, BigInt)> = Vec::new();
        for s in flo..=fhi {
            if let Some(slot) = page.slots.get(&(n, s)) {
                for (i, c) in slot.classes.iter().enumerate() {
                    classes.push((s, i, c.order.clone()));
                }
            }
        }
        let find = |s: i64, i: usize| classes.iter().position(|(a, b, _)| *a == s && *b == i);
        let mut rel: Vec<Vec<BigInt>> = Vec::new();
        let mut sources = BTreeSet::new();
        for e in extensions.iter().filter(|e| e.stem == n) {
            let x = find(e.source_filtration, e.source_index)
                .ok_or_else(|| Error::Extension(format!("{e}: source does not survive")))?;
            let y = find(e.target_filtration, e.target_index)
                .ok_or_else(|| Error::Extension(format!("{e}: target does not survive")))?;
            if e.target_filtration <= e.source_filtration {
                return Err(Error::Extension(format!("{e}: target must have higher filtration")));
            }
            if BigInt::from(e.multiplier) != classes[x].2 {
                return Err(Error::Extension(format!(
                    "{e}: multiplier differs from the order {} of the source",
                    classes[x].2
                )));
            }
            let mut v = vec![BigInt::zero(); classes.len()];
            v[x] = BigInt::from(e.multiplier);
            v[y] -= BigInt::one();
            rel.push(v);
            sources.insert(x);
        }
        for (j, (_, _, order)) in classes.iter().enumerate() {
            if !sources.contains(&j) && !order.is_zero() {
                let mut v = vec![BigInt::zero(); classes.len()];
                v[j] = order.clone();
                rel.push(v);
            }
        }
        let g = cokernel(&IntMatrix::from_columns(classes.len(), &rel));
        out.set(n, g)?;
    }
    Ok(out)
}

/// Dual of a homological spectral sequence under `Hom(-, Z)` and `Ext(-, Z)`.
///
/// A free cell at `(n, s)` dualizes to `(-n, -s)`, a torsion cell to
/// `(-n - 1, -s + 1)`. Differentials are transposed; an extension record
/// `p·x = y` becomes a differential from the dual of `y` to the dual of `x`.
/// Record indices refer to cells of the starting page here.
pub fn dualize_ss(ss: &SpectralSequence) -> Result<SpectralSequence> {
    let page = &ss.initial;
    if page.number != page.start {
        return Err(Error::Unsupported("dualize a starting page".into()));
    }
    for slot in page.slots.values() {
        if slot.cycles != IntMatrix::identity(slot.cover.len()) {
            return Err(Error::Unsupported("dualize a starting page".into()));
        }
    }
    let w = page.window;
    let window = Window {
        stems: (-w.stems.1, -w.stems.0 - 1),
        filtrations: (-w.filtrations.1, -w.filtrations.0 + if w.floor { 1 } else { 0 }),
        floor: w.ceiling,
        ceiling: w.floor,
    };
    let ht = page.trusted;
    let trusted = Window {
        stems: (-ht.stems.1, -ht.stems.0 - 1),
        filtrations: (
            (-ht.filtrations.1).max(window.filtrations.0),
            (-ht.filtrations.0).min(window.filtrations.1),
        ),
        floor: window.floor,
        ceiling: window.ceiling,
    };
    // (source position, cell) -> (dual position, dual cell index)
    let mut place: BTreeMap<(Position, usize), (Position, usize)> = BTreeMap::new();
    let mut cells: BTreeMap<Position, Vec<Cell>> = BTreeMap::new();
    for (&(n, s), slot) in &page.slots {
        for (j, cell) in slot.cover.iter().enumerate() {
            if cell.order.is_one() {
                continue;
            }
            let pos = if cell.order.is_zero() { (-n, -s) } else { (-n - 1, -s + 1) };
            if !window.contains(pos) {
                continue;
            }
            let list = cells.entry(pos).or_default();
            place.insert(((n, s), j), (pos, list.len()));
            list.push(Cell::new(&format!("{}*", cell.label), cell.order.clone()));
        }
    }
    let mut dual = Page::from_cells(page.number, window, cells);
    dual.trusted = trusted;
    let shape = |p: Position, q: Position| (dual.cover_len(q), dual.cover_len(p));
    let mut diffs: BTreeMap<u32, Differential> = BTreeMap::new();
    for d in &ss.differentials {
        for (pos, m) in &d.maps {
            let tpos = d.target(*pos);
            let (Some(src), Some(tgt)) = (page.slots.get(pos), page.slots.get(&tpos)) else {
                continue;
            };
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    let f = m.get(i, j);
                    if f.is_zero() {
                        continue;
                    }
                    let (ni, mj) = (&tgt.cover[i].order, &src.cover[j].order);
                    let value = match (ni.is_zero(), mj.is_zero()) {
                        (true, true) => f.clone(),
                        (false, false) => {
                            let scaled = f * mj;
                            if !scaled.is_multiple_of(ni) {
                                return Err(Error::InconsistentDifferential(format!(
                                    "d{} at {pos:?} is not a map of the cyclic summands",
                                    d.page
                                )));
                            }
                            scaled / ni
                        }
                        _ => continue,
                    };
                    let (Some(&(dp, di)), Some(&(dq, dj))) =
                        (place.get(&(tpos, i)), place.get(&(*pos, j)))
                    else {
                        continue;
                    };
                    diffs
                        .entry(d.page)
                        .or_insert_with(|| Differential::new(d.page))
                        .add_entry(dp, shape(dp, dq), dj, di, value);
                }
            }
        }
    }
    for e in &ss.extensions {
        let x = ((e.stem, e.source_filtration), e.source_index);
        let y = ((e.stem, e.target_filtration), e.target_index);
        let cell = |k: &(Position, usize)| page.slots.get(&k.0).and_then(|s| s.cover.get(k.1));
        let (Some(cx), Some(cy)) = (cell(&x), cell(&y)) else {
            return Err(Error::Extension(format!("{e}: unknown cells")));
        };
        if cx.order.is_zero() || !cy.order.is_zero() {
            return Err(Error::Unsupported(format!(
                "{e}: only torsion-to-free extensions dualize to differentials"
            )));
        }
        let r = (e.target_filtration - e.source_filtration + 1) as u32;
        let (Some(&(dp, di)), Some(&(dq, dj))) = (place.get(&y), place.get(&x)) else {
            continue;
        };
        diffs
            .entry(r)
            .or_insert_with(|| Differential::new(r))
            .add_entry(dp, shape(dp, dq), dj, di, BigInt::one());
    }
    Ok(SpectralSequence {
        initial: dual,
        differentials: diffs.into_values().collect(),
        extensions: Vec::new(),
    })
}
