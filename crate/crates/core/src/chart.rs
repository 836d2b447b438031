//! Charts of spectral sequence pages in Adams indexing: a box for each `Z`,
//! a dot for each `Z/2`, slope-one lines for η, arrows for differentials and
//! dashed lines for extensions.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::Result;
use crate::sseq::{Differential, ExtensionRecord, Page, Run};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassRef {
    pub stem: i64,
    pub filtration: i64,
    pub index: usize,
}

impl ClassRef {
    fn new(((stem, filtration), index): ((i64, i64), usize)) -> Self {
        Self {
            stem,
            filtration,
            index,
        }
    }
}

impl std::fmt::Display for ClassRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})#{}", self.stem, self.filtration, self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartClass {
    #[serde(flatten)]
    pub at: ClassRef,
    pub label: String,
    #[serde(with = "decimal::one")]
    pub order: BigInt,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartArrow {
    pub page: u32,
    pub from: ClassRef,
    pub to: ClassRef,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartExtension {
    pub multiplier: i64,
    pub from: ClassRef,
    pub to: ClassRef,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chart {
    pub title: String,
    pub page: u32,
    pub stems: (i64, i64),
    pub filtrations: (i64, i64),
    pub classes: Vec<ChartClass>,
    pub eta_lines: Vec<(ClassRef, ClassRef)>,
    pub differentials: Vec<ChartArrow>,
    pub extensions: Vec<ChartExtension>,
}

impl Chart {
    /// Chart of the trusted part of one page. η lines are drawn when the
    /// page's presentation has a generator called `η`; extension records are
    /// drawn only where both ends are still present.
    pub fn from_page(
        title: &str,
        page: &Page,
        d: Option<&Differential>,
        extensions: &[ExtensionRecord],
    ) -> Result<Self> {
        let classes = page
            .slots()
            .flat_map(|(pos, slot)| {
                slot.classes.iter().enumerate().map(move |(i, c)| ChartClass {
                    at: ClassRef::new((pos, i)),
                    label: c.label.clone(),
                    order: c.order.clone(),
                })
            })
            .collect::<Vec<_>>();
        let eta_lines = page
            .presentation
            .as_ref()
            .and_then(|p| p.generators.iter().position(|g| g.name == "η").map(|i| (i, p)))
            .map(|(i, p)| {
                let g = &p.generators[i];
                let mut lines: Vec<_> = page
                    .multiplication_lines(i, (g.stem, g.filtration))
                    .into_iter()
                    .map(|(a, b)| (ClassRef::new(a), ClassRef::new(b)))
                    .collect();
                lines.sort();
                lines
            })
            .unwrap_or_default();
        let mut differentials = Vec::new();
        if let Some(d) = d {
            for (a, b) in page.arrows(d)? {
                differentials.push(ChartArrow {
                    page: d.page,
                    from: ClassRef::new(a),
                    to: ClassRef::new(b),
                });
            }
        }
        differentials.sort_by_key(|a| (a.from, a.to));
        let present = |r: &ClassRef| classes.iter().any(|c| &c.at == r);
        let extensions = extensions
            .iter()
            .map(|e| ChartExtension {
                multiplier: e.multiplier,
                from: ClassRef::new(((e.stem, e.source_filtration), e.source_index)),
                to: ClassRef::new(((e.stem, e.target_filtration), e.target_index)),
            })
            .filter(|e| present(&e.from) && present(&e.to))
            .collect();
        let chart = Self {
            title: title.to_string(),
            page: page.number,
            stems: page.window.stems,
            filtrations: page.window.filtrations,
            classes,
            eta_lines,
            differentials,
            extensions,
        };
        Ok(chart.clip(page.trusted.stems, page.trusted.filtrations))
    }

    /// One chart per page of a run, each with the differential leaving it.
    /// Extension records go on the last page only.
    pub fn from_run(title: &str, run: &Run, extensions: &[ExtensionRecord]) -> Result<Vec<Self>> {
        let last = run.last().number;
        run.pages
            .iter()
            .map(|p| {
                let ext = if p.number == last { extensions } else { &[] };
                Chart::from_page(title, p, run.differential(p.number), ext)
            })
            .collect()
    }

    /// Restricts the drawing to a smaller window.
    pub fn clip(mut self, stems: (i64, i64), filtrations: (i64, i64)) -> Self {
        let inside = |r: &ClassRef| {
            (stems.0..=stems.1).contains(&r.stem) && (filtrations.0..=filtrations.1).contains(&r.filtration)
        };
        self.stems = stems;
        self.filtrations = filtrations;
        self.classes.retain(|c| inside(&c.at));
        self.eta_lines.retain(|(a, b)| inside(a) && inside(b));
        self.differentials.retain(|a| inside(&a.from) && inside(&a.to));
        self.extensions.retain(|e| inside(&e.from) && inside(&e.to));
        self
    }

    fn glyphs_at(&self, n: i64, s: i64) -> String {
        self.classes
            .iter()
            .filter(|c| c.at.stem == n && c.at.filtration == s)
            .map(|c| glyph(&c.order))
            .collect()
    }

    pub fn to_ascii(&self) -> String {
        let (n0, n1) = self.stems;
        let (s0, s1) = self.filtrations;
        let mut out = format!("E_{} {}\n", self.page, self.title);
        let label_w = [s0, s1].iter().map(|s| s.to_string().len()).max().unwrap_or(1);
        let widths: Vec<usize> = (n0..=n1)
            .map(|n| {
                let g = (s0..=s1).map(|s| self.glyphs_at(n, s).len()).max().unwrap_or(0);
                g.max(n.to_string().len()).max(2)
            })
            .collect();
        for s in (s0..=s1).rev() {
            let mut line = format!("{s:>label_w$} |");
            for (n, w) in (n0..=n1).zip(&widths) {
                let g = self.glyphs_at(n, s);
                let g = if g.is_empty() { ".".to_string() } else { g };
                let _ = write!(line, " {g:>w$}");
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        let rule: usize = widths.iter().map(|w| w + 1).sum();
        let _ = writeln!(out, "{:>label_w$} +{}", "", "-".repeat(rule));
        let mut axis = format!("{:>label_w$}  ", "");
        for (n, w) in (n0..=n1).zip(&widths) {
            let _ = write!(axis, " {n:>w$}");
        }
        out.push_str(axis.trim_end());
        out.push('\n');
        if !self.differentials.is_empty() {
            let _ = writeln!(out, "d_{}:", self.page);
            for a in &self.differentials {
                let _ = writeln!(out, "  {} -> {}", a.from, a.to);
            }
        }
        if !self.extensions.is_empty() {
            let _ = writeln!(out, "extensions:");
            for e in &self.extensions {
                let _ = writeln!(out, "  {} -x{}-> {}", e.from, e.multiplier, e.to);
            }
        }
        out
    }

    pub fn to_svg(&self, unit: u32) -> String {
        let u = unit as f64;
        let (n0, n1) = self.stems;
        let (s0, s1) = self.filtrations;
        let width = (n1 - n0 + 3) as f64 * u;
        let height = (s1 - s0 + 3) as f64 * u;
        let x = |n: i64| (n - n0 + 2) as f64 * u;
        let y = |s: i64| (s1 - s + 1) as f64 * u;
        let place = |r: &ClassRef| {
            let k = self
                .classes
                .iter()
                .filter(|c| c.at.stem == r.stem && c.at.filtration == r.filtration)
                .count()
                .max(1);
            let off = (r.index as f64 - (k as f64 - 1.0) / 2.0) * u / 5.0;
            (x(r.stem) + off, y(r.filtration))
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
        );
        let _ = writeln!(
            out,
            r#"<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z"/></marker></defs>"#
        );
        let _ = writeln!(out, r#"<title>E_{} {}</title>"#, self.page, escape(&self.title));
        let _ = writeln!(
            out,
            r#"<line class="axis" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
            x(n0) - u / 2.0,
            y(s0) + u / 2.0,
            x(n1) + u / 2.0,
            y(s0) + u / 2.0
        );
        let _ = writeln!(
            out,
            r#"<line class="axis" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
            x(n0) - u / 2.0,
            y(s0) + u / 2.0,
            x(n0) - u / 2.0,
            y(s1) - u / 2.0
        );
        for n in n0..=n1 {
            let _ = writeln!(
                out,
                r#"<text class="stem" x="{:.1}" y="{:.1}" text-anchor="middle" font-size="{:.1}">{n}</text>"#,
                x(n),
                y(s0) + u,
                u / 3.0
            );
        }
        for s in s0..=s1 {
            let _ = writeln!(
                out,
                r#"<text class="filtration" x="{:.1}" y="{:.1}" text-anchor="end" font-size="{:.1}">{s}</text>"#,
                x(n0) - u * 0.7,
                y(s) + u / 8.0,
                u / 3.0
            );
        }
        for (a, b) in &self.eta_lines {
            let (p, q) = (place(a), place(b));
            let _ = writeln!(
                out,
                r#"<line class="eta" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
                p.0, p.1, q.0, q.1
            );
        }
        for e in &self.extensions {
            let (p, q) = (place(&e.from), place(&e.to));
            let _ = writeln!(
                out,
                r#"<line class="extension" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-dasharray="4,3"/>"#,
                p.0, p.1, q.0, q.1
            );
        }
        for a in &self.differentials {
            let (p, q) = (place(&a.from), place(&a.to));
            let _ = writeln!(
                out,
                r#"<line class="d{}" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="blue" marker-end="url(#arrow)"/>"#,
                a.page, p.0, p.1, q.0, q.1
            );
        }
        for c in &self.classes {
            let (cx, cy) = place(&c.at);
            if c.order.is_zero() {
                let h = u / 6.0;
                let _ = writeln!(
                    out,
                    r#"<rect class="Z" x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"><title>{}</title></rect>"#,
                    cx - h,
                    cy - h,
                    2.0 * h,
                    2.0 * h,
                    escape(&c.label)
                );
            } else if c.order == BigInt::from(2) {
                let _ = writeln!(
                    out,
                    r#"<circle class="Z2" cx="{cx:.1}" cy="{cy:.1}" r="{:.1}"><title>{}</title></circle>"#,
                    u / 10.0,
                    escape(&c.label)
                );
            } else {
                let _ = writeln!(
                    out,
                    r#"<text class="Zn" x="{cx:.1}" y="{:.1}" text-anchor="middle" font-size="{:.1}">{}<title>{}</title></text>"#,
                    cy + u / 8.0,
                    u / 3.0,
                    c.order,
                    escape(&c.label)
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn glyph(order: &BigInt) -> String {
    if order.is_zero() {
        "[]".into()
    } else if order == &BigInt::from(2) {
        "o".into()
    } else if order.is_one() {
        String::new()
    } else {
        order.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ktheory::{hfpss_ku, hoss_ku, tate_ku};
    use crate::sseq::{leibniz_extend, Window};

    #[test]
    fn empty_page_has_axes() {
        let page = Page::from_cells(2, Window::new((-1, 1), (0, 1)), Vec::new());
        let c = Chart::from_page("empty", &page, None, &[]).unwrap();
        assert!(c.classes.is_empty());
        let text = c.to_ascii();
        assert_eq!(
            text,
            "E_2 empty\n1 |  .  .  .\n0 |  .  .  .\n  +---------\n    -1  0  1\n"
        );
        let svg = c.to_svg(40);
        assert_eq!(svg.matches("class=\"axis\"").count(), 2);
        assert_eq!(svg.matches("<rect").count(), 0);
    }

    #[test]
    fn tate_grid_of_dots() {
        let (page, _) = tate_ku(Window::new((-4, 4), (-3, 3))).unwrap();
        let c = Chart::from_page("tate", &page, None, &[]).unwrap();
        // η^a t^b sits at (a + 4b, a): every (n, s) with n ≡ s mod 4.
        let expect: Vec<(i64, i64)> = (-4..=4)
            .flat_map(|n| (-3..=3).map(move |s| (n, s)))
            .filter(|(n, s): &(i64, i64)| (n - s).rem_euclid(4) == 0)
            .collect();
        let got: Vec<(i64, i64)> = c.classes.iter().map(|c| (c.at.stem, c.at.filtration)).collect();
        let mut sorted = expect.clone();
        sorted.sort();
        assert_eq!(got, sorted);
        assert!(c.classes.iter().all(|c| c.order == BigInt::from(2)));
        let svg = c.to_svg(30);
        assert_eq!(svg.matches("<circle").count(), expect.len());
        assert!(!c.eta_lines.is_empty());
    }

    #[test]
    fn hfpss_e3_arrows() {
        let (page, _) = hfpss_ku(Window::new((-4, 8), (0, 4)).with_floor()).unwrap();
        let page3 = crate::sseq::turn_page(&page, &Differential::new(2)).unwrap();
        let d3 = leibniz_extend(&crate::ktheory::ku_d3(), &page3).unwrap();
        let c = Chart::from_page("hfpss", &page3, Some(&d3), &[]).unwrap();
        let from_t = c
            .differentials
            .iter()
            .find(|a| (a.from.stem, a.from.filtration) == (4, 0))
            .unwrap();
        assert_eq!((from_t.to.stem, from_t.to.filtration), (3, 3));
        let svg = c.to_svg(40);
        assert_eq!(svg.matches("class=\"d3\"").count(), c.differentials.len());
        assert_eq!(svg.matches("<rect").count(), c.classes.iter().filter(|c| c.order.is_zero()).count());
        assert_eq!(c.to_ascii(), c.clone().to_ascii());
    }

    #[test]
    fn hoss_dashed_extension() {
        let ss = hoss_ku(Window::new((-4, 4), (-6, 0)).with_ceiling()).unwrap();
        let run = ss.run(4).unwrap();
        let charts = Chart::from_run("hoss", &run, &ss.extensions).unwrap();
        let last = charts.last().unwrap();
        assert_eq!(last.extensions.len(), 1);
        assert_eq!(last.extensions[0].from.stem, 0);
        let svg = last.to_svg(40);
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
        assert!(last.to_ascii().contains("extensions:\n  (0,-2)#0 -x2-> (0,0)#0"));
    }

    #[test]
    fn json_round_trip() {
        let (page, _) = hfpss_ku(Window::new((0, 4), (0, 3)).with_floor()).unwrap();
        let c = Chart::from_page("x", &page, None, &[]).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        let back: Chart = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
