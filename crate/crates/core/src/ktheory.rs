//! Spectral sequences for `KU` with complex conjugation, and the cell
//! diagram argument for `d_3(t) = η^3`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groupcoh::{c2_homology, C2Module};
use crate::intlin::{GradedAbGroup, IntMatrix};
use crate::sseq::{
    dualize_ss, extract_abutment, leibniz_extend, localize_generator, page_from_presentation,
    Cell, Differential, DifferentialRule, ExtensionRecord, Generator, Page, Position,
    Presentation, SpectralSequence, Window,
};

pub const DEFAULT_HFPSS_WINDOW: Window = Window {
    stems: (-16, 24),
    filtrations: (0, 12),
    floor: true,
    ceiling: false,
};

pub const DEFAULT_TATE_WINDOW: Window = Window {
    stems: (-12, 12),
    filtrations: (-10, 10),
    floor: false,
    ceiling: false,
};

pub const DEFAULT_HOSS_WINDOW: Window = Window {
    stems: (-16, 24),
    filtrations: (-12, 0),
    floor: false,
    ceiling: true,
};

/// `Z[η, t^{±1}]/(2η)` with `|η| = (1, 1)`, `|t| = (4, 0)`.
pub fn ku_presentation() -> Presentation {
    Presentation::new(vec![
        Generator::new("η", 1, 1).with_order(2),
        Generator::new("t", 4, 0).invertible(),
    ])
}

pub fn ku_d3() -> DifferentialRule {
    DifferentialRule::new(3).assign("t", &[(1, &[("η", 3)])])
}

/// The `E_2` page of the homotopy fixed point spectral sequence for `KU`
/// and its `d_3`.
pub fn hfpss_ku(window: Window) -> Result<(Page, DifferentialRule)> {
    Ok((page_from_presentation(&ku_presentation(), window, 2)?, ku_d3()))
}

/// `E_2[η^{-1}]`, the Tate spectral sequence.
pub fn tate_ku(window: Window) -> Result<(Page, DifferentialRule)> {
    let mut base = window;
    base.filtrations = (0, window.filtrations.1.max(0));
    base.floor = true;
    let (e2, rule) = hfpss_ku(base)?;
    Ok((localize_generator(&e2, "η", window)?, rule))
}

/// `π_t KU` as a `C2`-module: `Z` with `c` acting by `(-1)^{t/2}`.
pub fn ku_coefficients(t: i64) -> Option<C2Module> {
    match t.rem_euclid(4) {
        0 => Some(C2Module::trivial()),
        2 => Some(C2Module::sign()),
        _ => None,
    }
}

fn hoss_label(h: i64, t: i64) -> String {
    format!("e[h={h},t={t}]")
}

/// Homotopy orbit spectral sequence, drawn cohomologically:
/// `H_h(C2, π_t KU)` sits at `(t + h, -h)`.
///
/// The `d_3` is read off the Tate spectral sequence through
/// `Ĥ^s = H_{-s-1}` for `s <= -2` and `Ĥ^{-1} = ker N ⊂ H_0`, which moves
/// Tate position `(n, s)` to `(n - 1, s + 1)`. Since `π_0 KO` is torsion free,
/// the `Z/2` at `(8j, -2)` is recorded as half the generator at `(8j, 0)`.
pub fn hoss_ku(window: Window) -> Result<SpectralSequence> {
    if window.filtrations.1 > 0 {
        return Err(Error::OutsideWindow(
            "the homotopy orbit spectral sequence lives in filtrations <= 0".into(),
        ));
    }
    let mut cells: Vec<(Position, Vec<Cell>)> = Vec::new();
    for n in window.stems.0..=window.stems.1 {
        for f in window.filtrations.0..=window.filtrations.1 {
            let h = -f;
            let t = n - h;
            let Some(module) = ku_coefficients(t) else { continue };
            let g = c2_homology(&module, h as usize)?;
            if g.is_zero() {
                continue;
            }
            let order = if g.free_rank() > 0 { BigInt::zero() } else { g.torsion()[0].clone() };
            cells.push(((n, f), vec![Cell::new(&hoss_label(h, t), order)]));
        }
    }
    let page = Page::from_cells(2, window, cells);
    let mut d3 = Differential::new(3);
    for ((m, f), _) in page.slots() {
        if f > -3 {
            continue;
        }
        let target = (m - 1, f + 3);
        if page.slot(target).is_none() {
            continue;
        }
        // Tate source η^a t^b at (m + 1, f - 1)
        let a = f - 1;
        let rest = m + 1 - a;
        if rest.rem_euclid(4) != 0 {
            continue;
        }
        let b = rest.div_euclid(4);
        if b.rem_euclid(2) == 1 {
            d3.insert((m, f), IntMatrix::from_rows(&[[1]]));
        }
    }
    let mut extensions = Vec::new();
    for n in window.stems.0..=window.stems.1 {
        if n.rem_euclid(8) == 0 && page.slot((n, -2)).is_some() && page.slot((n, 0)).is_some() {
            extensions.push(ExtensionRecord::new(n, 2, -2, 0));
        }
    }
    Ok(SpectralSequence {
        initial: page,
        differentials: vec![d3],
        extensions,
    })
}

/// The spectral sequence for `I_Z KU^{hC2}` obtained by dualizing the
/// homotopy orbit spectral sequence.
pub fn anderson_dual_hfpss(hoss_window: Window) -> Result<SpectralSequence> {
    dualize_ss(&hoss_ku(hoss_window)?)
}

/// `E_1` of the homotopy fixed point spectral sequence for `KU` from the
/// normalized cochains `KU -(1-c)-> KU -(1+c)-> KU -> ...`.
pub fn hfpss_ku_e1(window: Window) -> Result<SpectralSequence> {
    let mut cells = Vec::new();
    for n in window.stems.0..=window.stems.1 {
        for s in window.filtrations.0.max(0)..=window.filtrations.1 {
            let t = n + s;
            if t.rem_euclid(2) == 0 {
                cells.push(((n, s), vec![Cell::new(&format!("u^{}[{s}]", t / 2), 0)]));
            }
        }
    }
    let page = Page::from_cells(1, window, cells);
    let mut d1 = Differential::new(1);
    for ((n, s), _) in page.slots() {
        if page.slot((n - 1, s + 1)).is_none() {
            continue;
        }
        let c = if (n + s).rem_euclid(4) == 0 { 1 } else { -1 };
        let v = if s % 2 == 0 { 1 - c } else { 1 + c };
        if v != 0 {
            d1.insert((n, s), IntMatrix::from_rows(&[[v]]));
        }
    }
    Ok(SpectralSequence {
        initial: page,
        differentials: vec![d1],
        extensions: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttachingMap {
    Two,
    Eta,
}

impl AttachingMap {
    /// Difference in dimension between the upper and lower cell.
    pub fn span(self) -> i64 {
        match self {
            AttachingMap::Two => 1,
            AttachingMap::Eta => 2,
        }
    }
}

impl fmt::Display for AttachingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttachingMap::Two => "×2",
            AttachingMap::Eta => "η",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub upper: String,
    pub lower: String,
    pub map: AttachingMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDiagram {
    pub cells: Vec<(String, i64)>,
    pub attachments: Vec<Attachment>,
}

impl CellDiagram {
    pub fn new(cells: Vec<(String, i64)>, attachments: Vec<Attachment>) -> Result<Self> {
        let d = CellDiagram { cells, attachments };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        for (i, (name, _)) in self.cells.iter().enumerate() {
            if self.cells[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidParameter(format!("duplicate cell {name}")));
            }
        }
        for a in &self.attachments {
            let (Some(u), Some(l)) = (self.dimension(&a.upper), self.dimension(&a.lower)) else {
                return Err(Error::InvalidParameter(format!(
                    "attachment {} -> {} names an unknown cell",
                    a.upper, a.lower
                )));
            };
            if u - l != a.map.span() {
                return Err(Error::InvalidParameter(format!(
                    "{} attaches dimension {u} to {l}",
                    a.map
                )));
            }
        }
        Ok(())
    }

    pub fn dimension(&self, name: &str) -> Option<i64> {
        self.cells.iter().find(|(n, _)| n == name).map(|(_, d)| *d)
    }

    pub fn has_attachment(&self, upper_dim: i64, lower_dim: i64, map: AttachingMap) -> bool {
        self.attachments.iter().any(|a| {
            a.map == map
                && self.dimension(&a.upper) == Some(upper_dim)
                && self.dimension(&a.lower) == Some(lower_dim)
        })
    }
}

impl fmt::Display for CellDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.cells.iter().map(|(n, d)| format!("{n}:{d}")).collect();
        writeln!(f, "cells {}", dims.join(" "))?;
        for a in &self.attachments {
            writeln!(f, "{} {} -> {}", a.map, a.upper, a.lower)?;
        }
        Ok(())
    }
}

fn cell_name(d: i64) -> String {
    format!("e{d}")
}

/// Cells `bottom..=top` of `RP^∞_{-2}`: `×2` attaches `4j` to `4j - 1` and
/// `4j + 2` to `4j + 1`, `η` attaches `4j` to `4j - 2` and `4j + 1` to
/// `4j - 1`.
pub fn stunted_cell_diagram(bottom: i64, top: i64) -> Result<CellDiagram> {
    if top < bottom {
        return Err(Error::InvalidParameter(format!("top {top} is below bottom {bottom}")));
    }
    let cells: Vec<(String, i64)> = (bottom..=top).map(|d| (cell_name(d), d)).collect();
    let mut attachments = Vec::new();
    for lower in bottom..=top {
        let two = matches!(lower.rem_euclid(4), 1 | 3);
        let eta = matches!(lower.rem_euclid(4), 2 | 3);
        if two && lower < top {
            attachments.push(Attachment {
                upper: cell_name(lower + 1),
                lower: cell_name(lower),
                map: AttachingMap::Two,
            });
        }
        if eta && lower + 2 <= top {
            attachments.push(Attachment {
                upper: cell_name(lower + 2),
                lower: cell_name(lower),
                map: AttachingMap::Eta,
            });
        }
    }
    CellDiagram::new(cells, attachments)
}

/// Spanier-Whitehead dual: dimension `d` goes to `shift - d`, attachments
/// reverse direction, and cells are renamed by their new dimension.
pub fn sw_dual_diagram(d: &CellDiagram, shift: i64) -> Result<CellDiagram> {
    let new_dim = |name: &str| d.dimension(name).map(|k| shift - k);
    let mut cells: Vec<(String, i64)> = d
        .cells
        .iter()
        .map(|(_, k)| (cell_name(shift - k), shift - k))
        .collect();
    cells.sort_by_key(|(_, k)| *k);
    let mut attachments = Vec::new();
    for a in &d.attachments {
        let (Some(u), Some(l)) = (new_dim(&a.upper), new_dim(&a.lower)) else {
            return Err(Error::InvalidParameter("attachment names an unknown cell".into()));
        };
        attachments.push(Attachment {
            upper: cell_name(l),
            lower: cell_name(u),
            map: a.map,
        });
    }
    attachments.sort_by_key(|a| (d_of(&a.lower), a.map.span()));
    CellDiagram::new(cells, attachments)
}

fn d_of(name: &str) -> i64 {
    name.trim_start_matches('e').parse().unwrap_or(0)
}

/// Position of `η^k e_d` in the spectral sequence of a cell diagram, with
/// the cell of dimension 4 in filtration 0.
fn cell_position(d: i64, k: i64) -> Position {
    (d + k, 4 - d)
}

fn eta_label(k: i64, name: &str) -> String {
    match k {
        0 => name.to_string(),
        1 => format!("η{name}"),
        k => format!("η^{k}{name}"),
    }
}

/// `E_1` for a cell diagram: each cell contributes `Z`, `Z/2`, `Z/2` in
/// stems `d, d + 1, d + 2` (the truncation `1, η, η^2` of the sphere).
/// `×2` attachments give `d_1`, `η` attachments give `d_2`.
pub fn diagram_to_pages(d: &CellDiagram, window: Window) -> Result<SpectralSequence> {
    let mut cells: Vec<(Position, Vec<Cell>)> = Vec::new();
    for (name, dim) in &d.cells {
        for k in 0..3 {
            let mut cell = Cell::new(&eta_label(k, name), if k == 0 { 0 } else { 2 });
            cell.exponents = Some(vec![k, *dim]);
            cells.push((cell_position(*dim, k), vec![cell]));
        }
    }
    for (pos, _) in &cells {
        if !window.contains(*pos) {
            return Err(Error::OutsideWindow(format!(
                "cell class at {pos:?} is outside {window}"
            )));
        }
    }
    let mut page = Page::from_cells(1, window, cells);
    page.presentation = Some(Presentation::new(vec![
        Generator::new("η", 1, 0).with_order(2),
    ]));
    let mut d1 = Differential::new(1);
    let mut d2 = Differential::new(2);
    for a in &d.attachments {
        let u = d.dimension(&a.upper).expect("validated");
        let l = d.dimension(&a.lower).expect("validated");
        match a.map {
            AttachingMap::Two => d1.insert(cell_position(u, 0), IntMatrix::from_rows(&[[2]])),
            AttachingMap::Eta => {
                d2.insert(cell_position(u, 0), IntMatrix::from_rows(&[[1]]));
                d2.insert(cell_position(u, 1), IntMatrix::from_rows(&[[1]]));
                debug_assert_eq!(cell_position(l, 1).0, cell_position(u, 0).0 - 1);
            }
        }
    }
    Ok(SpectralSequence {
        initial: page,
        differentials: vec![d1, d2],
        extensions: Vec::new(),
    })
}

/// Cells of `(S^{2ρ})^{hC2} ≃ Σ^2 D(RP^∞_{-2})` up to dimension 4.
pub fn s2rho_diagram(bottom: i64) -> Result<CellDiagram> {
    sw_dual_diagram(&stunted_cell_diagram(-2, 2 - bottom)?, 2)
}

pub fn s2rho_window(bottom: i64) -> Window {
    Window::new((bottom - 1, 7), (-1, 4 - bottom + 1))
}

/// `s2rho` spectral sequence with cells from `bottom` to 4.
pub fn s2rho(bottom: i64) -> Result<SpectralSequence> {
    diagram_to_pages(&s2rho_diagram(bottom)?, s2rho_window(bottom))
}

/// Cells of the cell-diagram spectral sequence and their images under `v_1^2`,
/// as monomials in `η` and `t`. `η` maps to `η`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonMap {
    pub assignments: Vec<(String, Vec<(String, i64)>)>,
}

impl ComparisonMap {
    /// `e_4 ↦ t`, `e_2 = h_1^2 ↦ η^2`.
    pub fn v1_squared() -> Self {
        ComparisonMap {
            assignments: vec![
                ("e4".into(), vec![("t".into(), 1)]),
                ("e2".into(), vec![("η".into(), 2)]),
            ],
        }
    }

    fn image(&self, cell: &str) -> Option<&[(String, i64)]> {
        self.assignments
            .iter()
            .find(|(c, _)| c == cell)
            .map(|(_, m)| m.as_slice())
    }
}

/// Pushes `d_2(e_4)` in the spectral sequence of `S^{2ρ}` along the comparison
/// map into the homotopy fixed point spectral sequence for `KU`.
///
/// `η` has filtration 0 in the cell spectral sequence and filtration 1 for
/// `KU`, so a `d_r` landing on `η^k x` becomes a `d_{r + k}`.
pub fn v1sq_comparison(cells: &SpectralSequence, map: &ComparisonMap) -> Result<DifferentialRule> {
    let run = cells.run(3)?;
    let e2 = run.page(2).expect("run reaches E2");
    let d2 = run.differential(2).expect("run reaches E2");
    let pres = ku_presentation();
    let (source_name, source_image) = map
        .assignments
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty comparison map".into()))?;
    let source_dim = d_of(source_name);
    let spos = cell_position(source_dim, 0);
    let Some(slot) = e2.slot(spos) else {
        return Err(Error::InconsistentDifferential(format!("{source_name} is not on E2")));
    };
    let Some(matrix) = d2.get(spos) else {
        return Ok(DifferentialRule::new(3));
    };
    let tpos = d2.target(spos);
    let tslot = e2
        .slot(tpos)
        .ok_or_else(|| Error::InconsistentDifferential(format!("no target for d2 at {spos:?}")))?;
    let image = matrix.apply(&slot.classes[0].rep)?;
    let coords = tslot.class_coords(&image)?;
    if coords.iter().all(|c| c.is_zero()) {
        return Ok(DifferentialRule::new(3));
    }
    let mut terms: Vec<(i64, Vec<(String, i64)>)> = Vec::new();
    let mut length = None;
    for (c, class) in coords.iter().zip(&tslot.classes) {
        if c.is_zero() {
            continue;
        }
        // the class is a single cell η^k e_d
        let j = class
            .rep
            .iter()
            .position(|x| !x.is_zero())
            .expect("nonzero class");
        let cell = &tslot.cover[j];
        let e = cell.exponents.as_ref().expect("cell exponents");
        let (k, d) = (e[0], e[1]);
        let base = map.image(&cell_name(d)).ok_or_else(|| {
            Error::InconsistentDifferential(format!("{} has no image", cell_name(d)))
        })?;
        let mut mono: Vec<(String, i64)> = base.to_vec();
        mono.push(("η".into(), k));
        let r = 2 + k;
        if *length.get_or_insert(r) != r {
            return Err(Error::InconsistentDifferential(
                "image terms have different lengths".into(),
            ));
        }
        let coefficient: i64 = (c * &class.rep[j]).try_into().map_err(|_| {
            Error::InconsistentDifferential("coefficient does not fit".into())
        })?;
        terms.push((coefficient, merge(&mono)));
    }
    let r = length.expect("nonempty") as u32;
    let source = merge(source_image);
    let [(gen, 1)] = source.as_slice() else {
        return Err(Error::Unsupported("the source must map to a generator".into()));
    };
    let gen = gen.clone();
    let term_refs: Vec<(i64, Vec<(&str, i64)>)> = terms
        .iter()
        .map(|(c, m)| (*c, m.iter().map(|(g, k)| (g.as_str(), *k)).collect()))
        .collect();
    let refs: Vec<(i64, &[(&str, i64)])> =
        term_refs.iter().map(|(c, m)| (*c, m.as_slice())).collect();
    let rule = DifferentialRule::new(r).assign(&gen, &refs);
    // check the degrees against the KU presentation
    let probe = page_from_presentation(&pres, Window::new((-4, 8), (0, 6)).with_floor(), r)?;
    leibniz_extend(&rule, &probe)?;
    Ok(rule)
}

fn merge(mono: &[(String, i64)]) -> Vec<(String, i64)> {
    let mut out: Vec<(String, i64)> = Vec::new();
    for (g, k) in mono {
        match out.iter_mut().find(|(h, _)| h == g) {
            Some(e) => e.1 += k,
            None => out.push((g.clone(), *k)),
        }
    }
    out.retain(|(_, k)| *k != 0);
    out
}

/// `π_* KO` on `[lo, hi]` from the homotopy fixed point spectral sequence.
pub fn ko_homotopy_table(lo: i64, hi: i64) -> Result<GradedAbGroup> {
    if hi < lo {
        return Err(Error::InvalidParameter(format!("empty range {lo}..{hi}")));
    }
    let window = Window::new((lo - 2, hi + 2), (0, 12)).with_floor();
    let (e2, rule) = hfpss_ku(window)?;
    let run = crate::sseq::run(&e2, &[rule], 4)?;
    extract_abutment(run.last(), &[])?.restrict(lo, hi)
}

/// `π_* KO` with `Z` written as rank and the torsion as orders, for quick checks.
pub fn ko_expected(k: i64) -> crate::intlin::FinAbGroup {
    use crate::intlin::FinAbGroup;
    match k.rem_euclid(8) {
        0 | 4 => FinAbGroup::free(1),
        1 | 2 => FinAbGroup::cyclic(2),
        _ => FinAbGroup::zero(),
    }
}

/// Whether `d` has the cell-diagram attachment of `η` in the expected spot.
pub fn has_d2_on_e4(ss: &SpectralSequence) -> bool {
    ss.differentials
        .iter()
        .any(|d| d.page == 2 && d.get(cell_position(4, 0)).is_some_and(|m| m.get(0, 0).is_one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intlin::FinAbGroup;
    use crate::sseq::run;

    #[test]
    fn hfpss_slots() {
        let (p, rule) = hfpss_ku(DEFAULT_HFPSS_WINDOW).unwrap();
        assert_eq!(p.group((0, 0)), FinAbGroup::free(1));
        assert_eq!(p.group((1, 1)), FinAbGroup::cyclic(2));
        assert_eq!(p.group((4, 0)), FinAbGroup::free(1));
        assert_eq!(p.group((2, 0)), FinAbGroup::zero());
        assert_eq!(rule.to_string(), "d3(t) = η^3");
    }

    #[test]
    fn e1_agrees_with_presentation() {
        let w = Window::new((-8, 8), (0, 8)).with_floor();
        let e1 = hfpss_ku_e1(w).unwrap().run(2).unwrap();
        let (e2, _) = hfpss_ku(w).unwrap();
        let got = e1.last();
        let (a, b) = got.trusted.stems;
        let (fa, fb) = got.trusted.filtrations;
        for n in a..=b {
            for s in fa..=fb {
                assert_eq!(got.group((n, s)), e2.group((n, s)), "{n},{s}");
            }
        }
    }

    #[test]
    fn ko_table() {
        let ko = ko_homotopy_table(-1, 8).unwrap();
        for k in -1..=8 {
            assert_eq!(ko.get(k).unwrap(), &ko_expected(k), "stem {k}");
        }
    }

    #[test]
    fn tate_slots() {
        let (p, _) = tate_ku(DEFAULT_TATE_WINDOW).unwrap();
        assert_eq!(p.group((-1, -1)), FinAbGroup::cyclic(2));
        assert_eq!(p.group((0, 0)), FinAbGroup::cyclic(2));
    }

    #[test]
    fn hoss_abutment() {
        let ss = hoss_ku(DEFAULT_HOSS_WINDOW).unwrap();
        assert_eq!(ss.initial.group((0, 0)), FinAbGroup::free(1));
        assert_eq!(ss.initial.group((2, 0)), FinAbGroup::cyclic(2));
        assert!(ss.extensions.contains(&ExtensionRecord::new(0, 2, -2, 0)));
        let run = ss.run(4).unwrap();
        let g = extract_abutment(run.last(), &ss.extensions).unwrap();
        for k in 0..=8 {
            assert_eq!(g.get(k).unwrap(), &ko_expected(k), "stem {k}");
        }
    }

    #[test]
    fn anderson_dual_abutment() {
        let ss = anderson_dual_hfpss(DEFAULT_HOSS_WINDOW).unwrap();
        let run = ss.run(4).unwrap();
        let g = extract_abutment(run.last(), &[]).unwrap();
        let (lo, hi) = g.window();
        assert!(lo <= -8 && hi >= 8, "{lo}..{hi}");
        for k in lo..=hi {
            assert_eq!(g.get(k).unwrap(), &ko_expected(k - 4), "stem {k}");
        }
    }

    #[test]
    fn double_dual_reproduces_hoss() {
        let hoss = hoss_ku(DEFAULT_HOSS_WINDOW).unwrap();
        let twice = dualize_ss(&dualize_ss(&hoss).unwrap()).unwrap();
        let w = twice.initial.window;
        for n in w.stems.0..=w.stems.1 {
            for s in (w.filtrations.0 + 1)..=w.filtrations.1 {
                assert_eq!(twice.initial.group((n, s)), hoss.initial.group((n, s)), "{n},{s}");
            }
        }
    }

    #[test]
    fn stunted_attachments() {
        let d = stunted_cell_diagram(-2, 6).unwrap();
        assert!(d.has_attachment(0, -1, AttachingMap::Two));
        assert!(d.has_attachment(0, -2, AttachingMap::Eta));
        assert!(d.has_attachment(1, -1, AttachingMap::Eta));
        assert!(d.has_attachment(2, 1, AttachingMap::Two));
        assert!(d.has_attachment(4, 3, AttachingMap::Two));
        assert!(d.has_attachment(5, 3, AttachingMap::Eta));
        assert!(d.has_attachment(6, 5, AttachingMap::Two));
        assert_eq!(d.attachments.len(), 8);
        assert_eq!(d.cells.len(), 9);
        assert!(stunted_cell_diagram(3, 3).unwrap().attachments.is_empty());
        assert!(stunted_cell_diagram(3, 2).is_err());
    }

    #[test]
    fn sw_dual() {
        let d = stunted_cell_diagram(-2, 6).unwrap();
        let dual = sw_dual_diagram(&d, 2).unwrap();
        assert_eq!(dual.dimension("e4"), Some(4));
        assert_eq!(dual.cells.first().unwrap().1, -4);
        assert!(dual.has_attachment(3, 2, AttachingMap::Two));
        assert!(dual.has_attachment(1, 0, AttachingMap::Two));
        assert!(dual.has_attachment(4, 2, AttachingMap::Eta));
        assert!(dual.has_attachment(3, 1, AttachingMap::Eta));
        assert!(dual.has_attachment(-3, -4, AttachingMap::Two));
        assert_eq!(sw_dual_diagram(&sw_dual_diagram(&d, 0).unwrap(), 0).unwrap(), d);
    }

    #[test]
    fn cell_spectral_sequence() {
        let ss = s2rho(-4).unwrap();
        assert!(has_d2_on_e4(&ss));
        let run = ss.run(3).unwrap();
        let e2 = run.page(2).unwrap();
        assert_eq!(e2.group((4, 0)), FinAbGroup::free(1));
        assert_eq!(e2.group((2, 2)), FinAbGroup::cyclic(2));
        let arrows = e2.arrows(run.differential(2).unwrap()).unwrap();
        let label = |(p, i): (Position, usize)| e2.slot(p).unwrap().classes[i].label.clone();
        assert!(arrows.iter().any(|&(a, b)| label(a) == "e4" && label(b) == "ηe2"));
        let single = diagram_to_pages(
            &stunted_cell_diagram(0, 0).unwrap(),
            Window::new((-1, 3), (3, 5)),
        )
        .unwrap();
        assert!(single.differentials.iter().all(|d| d.is_zero()));
    }

    #[test]
    fn d3_from_cells() {
        let rule = v1sq_comparison(&s2rho(-4).unwrap(), &ComparisonMap::v1_squared()).unwrap();
        assert_eq!(rule, ku_d3());
        let inert = diagram_to_pages(
            &CellDiagram::new(vec![("e4".into(), 4), ("e2".into(), 2)], Vec::new()).unwrap(),
            s2rho_window(2),
        )
        .unwrap();
        assert!(v1sq_comparison(&inert, &ComparisonMap::v1_squared()).unwrap().is_empty());
    }

    #[test]
    fn degeneration() {
        let (e2, rule) = hfpss_ku(Window::new((-8, 16), (0, 10)).with_floor()).unwrap();
        let r = run(&e2, &[rule], 5).unwrap();
        let (e4, e5) = (r.page(4).unwrap(), r.page(5).unwrap());
        for (pos, slot) in e4.slots() {
            assert_eq!(e5.slot(pos).unwrap().group, slot.group);
        }
    }
}
