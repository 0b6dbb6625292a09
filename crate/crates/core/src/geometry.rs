//! Partitions drawn in the unit disk: point `l` of `[n]` sits at `e^{-2iπl/n}`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::Serialize;

use crate::model::NCPartition;
use crate::numeric::{gauss_legendre, integrate};

/// Chords joining consecutive elements of each block, the last element
/// joined back to the first. A singleton contributes the degenerate chord
/// `(x, x)`; a pair contributes both `(a, b)` and `(b, a)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChordSystem {
    pub n: usize,
    pub chords: Vec<(usize, usize)>,
}

impl ChordSystem {
    /// Pairwise check that no two chords cross in the open disk.
    pub fn is_non_crossing(&self) -> bool {
        let inside = |x: usize, a: usize, b: usize| a < x && x < b;
        let norm = |(a, b): (usize, usize)| (a.min(b), a.max(b));
        for (i, &c1) in self.chords.iter().enumerate() {
            let (a, b) = norm(c1);
            if a == b {
                continue;
            }
            for &c2 in &self.chords[i + 1..] {
                let (c, d) = norm(c2);
                if c == d || a == c || a == d || b == c || b == d {
                    continue;
                }
                if inside(c, a, b) != inside(d, a, b) {
                    return false;
                }
            }
        }
        true
    }
}

pub fn chord_system(p: &NCPartition) -> ChordSystem {
    let mut chords = Vec::with_capacity(p.n());
    for b in p.blocks() {
        for (i, &x) in b.iter().enumerate() {
            chords.push((x, b[(i + 1) % b.len()]));
        }
    }
    ChordSystem { n: p.n(), chords }
}

/// Numerator of the angular length `min(d, n - d)/n`.
fn angular_steps(n: usize, a: usize, b: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// `C(P)` as the exact fraction `(steps, n)`.
pub fn longest_chord_exact(p: &NCPartition) -> (usize, usize) {
    let n = p.n();
    let best = p
        .blocks()
        .iter()
        .flat_map(|b| {
            b.iter()
                .enumerate()
                .map(move |(i, &x)| angular_steps(n, x, b[(i + 1) % b.len()]))
        })
        .max()
        .unwrap_or(0);
    (best, n)
}

/// Largest angular length of a chord, in `[0, 1/2]`.
pub fn longest_chord(p: &NCPartition) -> f64 {
    match longest_chord_exact(p) {
        (_, 0) => 0.0,
        (k, n) => k as f64 / n as f64,
    }
}

/// Limit law of the longest chord, with density
/// `(3x - 1) / (π x² (1-x)² √(1-2x))` on `[1/3, 1/2]`.
#[derive(Debug, Clone)]
pub struct LimitChordLaw {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

pub const CHORD_QUADRATURE_ORDER: usize = 128;

impl Default for LimitChordLaw {
    fn default() -> Self {
        let (nodes, weights) = gauss_legendre(CHORD_QUADRATURE_ORDER);
        LimitChordLaw { nodes, weights }
    }
}

impl LimitChordLaw {
    pub fn density(&self, x: f64) -> f64 {
        if !(x > 1.0 / 3.0 && x < 0.5) {
            return 0.0;
        }
        (3.0 * x - 1.0) / (PI * x * x * (1.0 - x).powi(2) * (1.0 - 2.0 * x).sqrt())
    }

    /// Integrand after `u = √(1 - 2x)`, which absorbs the `1/√(1-2x)` pole.
    fn smoothed(u: f64) -> f64 {
        let x = 0.5 * (1.0 - u * u);
        (3.0 * x - 1.0) / (PI * x * x * (1.0 - x).powi(2))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 1.0 / 3.0 {
            return 0.0;
        }
        if x >= 0.5 {
            return 1.0;
        }
        let top = 1.0 / 3f64.sqrt();
        let bottom = (1.0 - 2.0 * x).sqrt();
        integrate(&self.nodes, &self.weights, bottom, top, Self::smoothed).clamp(0.0, 1.0)
    }

    /// Total mass; 1 up to quadrature error.
    pub fn total_mass(&self) -> f64 {
        integrate(
            &self.nodes,
            &self.weights,
            0.0,
            1.0 / 3f64.sqrt(),
            Self::smoothed,
        )
    }
}

pub fn limit_chord_law() -> &'static LimitChordLaw {
    static LAW: OnceLock<LimitChordLaw> = OnceLock::new();
    LAW.get_or_init(LimitChordLaw::default)
}

pub fn limit_chord_cdf(x: f64) -> f64 {
    limit_chord_law().cdf(x)
}

/// `(cos 2πl/n, -sin 2πl/n)`.
pub fn circle_point(l: usize, n: usize) -> (f64, f64) {
    let (s, c) = (2.0 * PI * l as f64 / n as f64).sin_cos();
    (c, -s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockHull {
    pub block: Vec<usize>,
    /// counterclockwise
    pub vertices: Vec<(f64, f64)>,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullReport {
    pub hulls: Vec<BlockHull>,
    pub total_area: f64,
}

fn shoelace(points: &[(f64, f64)]) -> f64 {
    let k = points.len();
    0.5 * (0..k)
        .map(|i| {
            let (x1, y1) = points[i];
            let (x2, y2) = points[(i + 1) % k];
            x1 * y2 - x2 * y1
        })
        .sum::<f64>()
}

/// Convex hull of every block; blocks with fewer than 3 points have area 0.
pub fn block_hulls(p: &NCPartition) -> HullReport {
    let n = p.n();
    let hulls: Vec<BlockHull> = p
        .blocks()
        .iter()
        .map(|b| {
            // increasing labels run clockwise
            let vertices: Vec<(f64, f64)> = b.iter().rev().map(|&l| circle_point(l, n)).collect();
            let area = if b.len() >= 3 {
                shoelace(&vertices)
            } else {
                0.0
            };
            BlockHull {
                block: b.clone(),
                vertices,
                area,
            }
        })
        .collect();
    let total_area = hulls.iter().map(|h| h.area).sum();
    HullReport { hulls, total_area }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    pub fill_hulls: bool,
    pub shade_by_area: bool,
    pub size_px: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            fill_hulls: true,
            shade_by_area: true,
            size_px: 512,
        }
    }
}

/// Darkest first.
const GRAY_RAMP: [&str; 8] = [
    "#1a1a1a", "#333333", "#4d4d4d", "#666666", "#808080", "#999999", "#b3b3b3", "#cccccc",
];

/// SVG 1.1 drawing: the unit circle, one polygon per block of size >= 3, a
/// line per pair and a dot per singleton.
pub fn render_svg(p: &NCPartition, opts: RenderOptions) -> String {
    let size = opts.size_px as f64;
    let center = size / 2.0;
    let radius = 0.45 * size;
    let n = p.n();
    let to_px = |l: usize| {
        let (x, y) = circle_point(l, n);
        (center + radius * x, center - radius * y)
    };

    let hulls = block_hulls(p);
    // rank polygons by area, largest first; ties broken by block order
    let mut order: Vec<usize> = (0..hulls.hulls.len())
        .filter(|&i| hulls.hulls[i].block.len() >= 3)
        .collect();
    order.sort_by(|&a, &b| {
        hulls.hulls[b]
            .area
            .total_cmp(&hulls.hulls[a].area)
            .then(a.cmp(&b))
    });
    let mut shade = vec![GRAY_RAMP[4]; hulls.hulls.len()];
    if opts.shade_by_area {
        for (rank, &i) in order.iter().enumerate() {
            shade[i] = GRAY_RAMP[rank * GRAY_RAMP.len() / order.len()];
        }
    }

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        opts.size_px
    );
    let _ = writeln!(
        svg,
        r##"<circle cx="{center:.6}" cy="{center:.6}" r="{radius:.6}" fill="none" stroke="#000000" stroke-width="1"/>"##
    );
    let stroke = (size / 1000.0).max(0.5);
    let dot = (radius / n.max(1) as f64).clamp(0.5, 3.0);
    for (hull, fill) in hulls.hulls.iter().zip(&shade) {
        let b = &hull.block;
        match b.len() {
            1 => {
                let (x, y) = to_px(b[0]);
                let _ = writeln!(
                    svg,
                    r##"<circle cx="{x:.6}" cy="{y:.6}" r="{dot:.6}" fill="#000000"/>"##
                );
            }
            2 => {
                let (x1, y1) = to_px(b[0]);
                let (x2, y2) = to_px(b[1]);
                let _ = writeln!(
                    svg,
                    r##"<line x1="{x1:.6}" y1="{y1:.6}" x2="{x2:.6}" y2="{y2:.6}" stroke="#000000" stroke-width="{stroke:.6}"/>"##
                );
            }
            _ => {
                let points = b
                    .iter()
                    .map(|&l| {
                        let (x, y) = to_px(l);
                        format!("{x:.6},{y:.6}")
                    })
                    .collect::<Vec<_>>()
                    .join(" ");
                let fill = if opts.fill_hulls { fill } else { "none" };
                let _ = writeln!(
                    svg,
                    r##"<polygon points="{points}" fill="{fill}" stroke="#000000" stroke-width="{stroke:.6}"/>"##
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_partition;

    fn running_example() -> NCPartition {
        validate_partition(
            vec![
                vec![1, 3, 5],
                vec![2],
                vec![4],
                vec![6, 7, 11, 12],
                vec![8],
                vec![9, 10],
            ],
            12,
        )
        .unwrap()
    }

    #[test]
    fn chords_of_running_example() {
        let c = chord_system(&running_example());
        assert_eq!(c.chords.len(), 12);
        for ch in [(1, 3), (3, 5), (5, 1), (9, 10), (10, 9), (2, 2), (12, 6)] {
            assert!(c.chords.contains(&ch), "{ch:?}");
        }
        assert!(c.is_non_crossing());
        assert_eq!(longest_chord_exact(&running_example()), (6, 12));
        assert_eq!(longest_chord(&running_example()), 0.5);
    }

    #[test]
    fn trivial_chord_systems() {
        let s = chord_system(&NCPartition::singletons(5));
        assert!(s.chords.iter().all(|&(a, b)| a == b));
        assert_eq!(longest_chord(&NCPartition::singletons(5)), 0.0);
        let one = chord_system(&NCPartition::one_block(5));
        assert_eq!(one.chords, vec![(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)]);
        assert_eq!(longest_chord(&NCPartition::one_block(2)), 0.5);
        let crossing = ChordSystem {
            n: 4,
            chords: vec![(1, 3), (2, 4)],
        };
        assert!(!crossing.is_non_crossing());
    }

    #[test]
    fn limit_law_quadrature() {
        let law = limit_chord_law();
        assert!((law.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(limit_chord_cdf(1.0 / 3.0), 0.0);
        assert_eq!(limit_chord_cdf(0.5), 1.0);
        // trapezoid on a fine grid in v = √(1-2x), independent of the nodes
        let x: f64 = 0.4;
        let (a, b) = ((1.0 - 2.0 * x).sqrt(), 1.0 / 3f64.sqrt());
        let steps = 200_000;
        let h = (b - a) / steps as f64;
        let g = |v: f64| {
            let y = 0.5 * (1.0 - v * v);
            (3.0 * y - 1.0) / (PI * y * y * (1.0 - y) * (1.0 - y))
        };
        let trap = h * ((1..steps).map(|i| g(a + i as f64 * h)).sum::<f64>() + 0.5 * (g(a) + g(b)));
        assert!((limit_chord_cdf(x) - trap).abs() < 1e-7);
        let mut prev = 0.0;
        for i in 0..=100 {
            let c = limit_chord_cdf(1.0 / 3.0 + i as f64 / 600.0);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn hull_areas() {
        let tri = block_hulls(&NCPartition::one_block(3));
        assert!((tri.total_area - 3.0 * 3f64.sqrt() / 4.0).abs() < 1e-12);
        assert_eq!(block_hulls(&NCPartition::singletons(9)).total_area, 0.0);
        let h = block_hulls(&running_example());
        let areas: Vec<f64> = h.hulls.iter().map(|h| h.area).collect();
        assert!(areas[0] > 0.0 && areas[3] > 0.0);
        assert_eq!(areas.iter().filter(|&&a| a > 0.0).count(), 2);
        let big = block_hulls(&NCPartition::one_block(1000)).total_area;
        assert!(big < PI && PI - big < 1e-4);
    }

    #[test]
    fn svg_census() {
        let svg = render_svg(&running_example(), RenderOptions::default());
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert_eq!(svg.matches("<line").count(), 1);
        // outline circle plus three dots
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(
            svg,
            render_svg(&running_example(), RenderOptions::default())
        );
        let dots = render_svg(&NCPartition::singletons(7), RenderOptions::default());
        assert_eq!(dots.matches("<circle").count(), 8);
        assert!(!dots.contains("<polygon") && !dots.contains("<line"));
        // the larger quadrilateral gets the darker gray
        let quad = svg
            .lines()
            .find(|l| l.contains("<polygon") && l.matches(',').count() == 4)
            .unwrap();
        assert!(quad.contains(GRAY_RAMP[0]));
    }
}
