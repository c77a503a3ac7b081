//! Write-only views of solutions: SVG drawings of currents and forests and
//! CSV tables of per-atom multiplicities and costs.

use crate::coefficients::{coeff_norm, cost_c, pow_alpha, Alpha, CoeffError, NormSpec, PhiNorm};
use crate::currents::PolyCurrent1;
use crate::geometry::{Point, Segment};
use crate::mailing::ThetaField;
use crate::steiner::Forest;
use std::fmt::Write as _;

const CANVAS: f64 = 640.0;
const MARGIN: f64 = 48.0;

/// Affine map from model coordinates to the SVG canvas (y flipped).
struct Viewport {
    min: [f64; 2],
    scale: f64,
}

impl Viewport {
    fn fit(points: impl Iterator<Item = [f64; 2]>) -> Viewport {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        if !min[0].is_finite() {
            (min, max) = ([0.0, 0.0], [1.0, 1.0]);
        }
        let span = (max[0] - min[0]).max(max[1] - min[1]).max(1e-9);
        Viewport { min, scale: (CANVAS - 2.0 * MARGIN) / span }
    }

    fn map(&self, p: &[f64]) -> (f64, f64) {
        (
            MARGIN + (p[0] - self.min[0]) * self.scale,
            CANVAS - MARGIN - (p[1] - self.min[1]) * self.scale,
        )
    }
}

fn xy(p: &Point) -> [f64; 2] {
    let c = p.to_f64();
    [c[0], c.get(1).copied().unwrap_or(0.0)]
}

fn svg_open(out: &mut String) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS}\" height=\"{CANVAS}\" \
         viewBox=\"0 0 {CANVAS} {CANVAS}\">"
    );
    let _ = writeln!(out, "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
}

fn svg_edge(out: &mut String, vp: &Viewport, seg: &Segment, width: f64, color: &str, label: &str) {
    let (x1, y1) = vp.map(&xy(seg.a()));
    let (x2, y2) = vp.map(&xy(seg.b()));
    let _ = writeln!(
        out,
        "  <line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" \
         stroke=\"{color}\" stroke-width=\"{width:.2}\" stroke-linecap=\"round\">\
         <title>{label}</title></line>"
    );
}

/// A small triangle at the segment midpoint showing its orientation.
fn svg_arrow(out: &mut String, vp: &Viewport, seg: &Segment, color: &str) {
    let (x1, y1) = vp.map(&xy(seg.a()));
    let (x2, y2) = vp.map(&xy(seg.b()));
    let (dx, dy) = (x2 - x1, y2 - y1);
    let len = (dx * dx + dy * dy).sqrt();
    if len < 12.0 {
        return;
    }
    let (ux, uy) = (dx / len, dy / len);
    let (px, py) = (-uy, ux);
    let (mx, my) = ((x1 + x2) / 2.0, (y1 + y2) / 2.0);
    let tip = (mx + 6.0 * ux, my + 6.0 * uy);
    let left = (mx - 4.0 * ux + 4.0 * px, my - 4.0 * uy + 4.0 * py);
    let right = (mx - 4.0 * ux - 4.0 * px, my - 4.0 * uy - 4.0 * py);
    let _ = writeln!(
        out,
        "  <polygon points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" fill=\"{color}\"/>",
        tip.0, tip.1, left.0, left.1, right.0, right.1
    );
}

fn svg_dot(out: &mut String, vp: &Viewport, p: &Point, r: f64, color: &str) {
    let (cx, cy) = vp.map(&xy(p));
    let _ = writeln!(
        out,
        "  <circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r}\" fill=\"{color}\"/>"
    );
}

/// Draws a current: atoms as oriented lines with width scaled by coefficient
/// norm (tooltips carry the exact coefficient vector), `marks` as red dots.
pub fn svg_current(t: &PolyCurrent1, spec: &NormSpec, marks: &[Point]) -> String {
    let vp = Viewport::fit(
        t.atoms()
            .iter()
            .flat_map(|a| [xy(a.segment.a()), xy(a.segment.b())])
            .chain(marks.iter().map(xy)),
    );
    let norms: Vec<f64> = t
        .atoms()
        .iter()
        .map(|a| coeff_norm(&a.coef, spec).unwrap_or(0.0))
        .collect();
    let peak = norms.iter().fold(0.0f64, |m, &x| m.max(x)).max(1e-12);
    let mut out = String::new();
    svg_open(&mut out);
    for (atom, norm) in t.atoms().iter().zip(&norms) {
        let width = 1.0 + 3.0 * norm / peak;
        let label = format!("theta = {:?}, norm = {norm}", atom.coef);
        svg_edge(&mut out, &vp, &atom.segment, width, "#1f77b4", &label);
        svg_arrow(&mut out, &vp, &atom.segment, "#1f77b4");
    }
    for p in marks {
        svg_dot(&mut out, &vp, p, 4.5, "#d62728");
    }
    out.push_str("</svg>\n");
    out
}

/// Draws a forest: edges in green, `terminals` as red dots, remaining
/// vertices (branch points) as smaller black dots.
pub fn svg_forest(f: &Forest, terminals: &[Point]) -> String {
    let vp = Viewport::fit(f.vertices().iter().chain(terminals).map(xy));
    let mut out = String::new();
    svg_open(&mut out);
    for e in 0..f.edges().len() {
        let seg = f.segment(e);
        let label = format!("length = {}", seg.length());
        svg_edge(&mut out, &vp, &seg, 2.5, "#2ca02c", &label);
    }
    for v in f.vertices() {
        if !terminals.contains(v) {
            svg_dot(&mut out, &vp, v, 3.0, "#333333");
        }
    }
    for p in terminals {
        svg_dot(&mut out, &vp, p, 4.5, "#d62728");
    }
    out.push_str("</svg>\n");
    out
}

/// CSV of the per-atom multiplicity field: length, anti-aligned count,
/// aligned count, and the atom's energy contribution.
pub fn csv_theta(field: &ThetaField, phi: &PhiNorm, alpha: Alpha) -> String {
    let mut out = String::from("length,theta_minus,theta_plus,cost\n");
    let a = alpha.value();
    for atom in &field.atoms {
        let len = atom.segment.length();
        let cost = phi.eval_nn(
            pow_alpha(atom.theta_minus as f64, a),
            pow_alpha(atom.theta_plus as f64, a),
        ) * len;
        let _ = writeln!(out, "{len},{},{},{cost}", atom.theta_minus, atom.theta_plus);
    }
    out
}

/// CSV of a matrix-coefficient current: length, total anti-aligned and
/// aligned units, and the atom's transport cost contribution.
pub fn csv_current(t: &PolyCurrent1, phi: &PhiNorm, alpha: Alpha) -> String {
    let mut out = String::from("length,theta_minus,theta_plus,cost\n");
    for atom in t.atoms() {
        let len = atom.segment.length();
        let plus: f64 = atom.coef.iter().filter(|&&x| x > 0.0).sum();
        let minus: f64 = -atom.coef.iter().filter(|&&x| x < 0.0).sum::<f64>();
        let ints: Vec<i64> = atom.coef.iter().map(|&x| x as i64).collect();
        let cost = cost_c(&ints, phi, alpha) * len;
        let _ = writeln!(out, "{len},{minus},{plus},{cost}");
    }
    out
}

/// CSV of a current priced by a coefficient norm: length, total negative and
/// positive units, and the atom's mass contribution `‖coef‖ · length`.
/// Suits unit-coefficient forests and real-coefficient relaxation output,
/// where the transport-cost table of [`csv_current`] does not apply.
pub fn csv_mass(t: &PolyCurrent1, spec: &NormSpec) -> Result<String, CoeffError> {
    let mut out = String::from("length,theta_minus,theta_plus,cost\n");
    for atom in t.atoms() {
        let len = atom.segment.length();
        let plus: f64 = atom.coef.iter().filter(|&&x| x > 0.0).sum();
        let minus: f64 = -atom.coef.iter().filter(|&&x| x < 0.0).sum::<f64>();
        let cost = coeff_norm(&atom.coef, spec)? * len;
        let _ = writeln!(out, "{len},{minus},{plus},{cost}");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::Ring;
    use crate::mailing::{theta_pm, LabeledPath, PathFamily};
    use crate::currents::MailingInstance;
    use crate::geometry::Polyline;

    fn seg(ax: i64, ay: i64, bx: i64, by: i64) -> Segment {
        Segment::new(Point::xy(ax, ay), Point::xy(bx, by)).unwrap()
    }

    #[test]
    fn current_svg_draws_every_atom_and_mark() {
        let t = PolyCurrent1::new(
            1,
            Ring::Integer,
            vec![(seg(0, 0, 2, 0), vec![1.0]), (seg(2, 0, 2, 2), vec![2.0])],
        )
        .unwrap();
        let svg = svg_current(&t, &NormSpec::linf(1), &[Point::xy(0, 0), Point::xy(2, 2)]);
        assert_eq!(svg.matches("<line").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn forest_svg_separates_terminals_from_branch_points() {
        let forest = Forest::new(
            vec![Point::xy(0, 0), Point::xy(2, 0), Point::xy(1, 1)],
            vec![(0, 2), (1, 2)],
        )
        .unwrap();
        let svg = svg_forest(&forest, &[Point::xy(0, 0), Point::xy(2, 0)]);
        assert_eq!(svg.matches("<line").count(), 2);
        // two red terminals and one black branch point
        assert_eq!(svg.matches("#d62728").count(), 2);
        assert_eq!(svg.matches("#333333").count(), 1);
    }

    #[test]
    fn rendering_is_deterministic() {
        let t = PolyCurrent1::new(1, Ring::Integer, vec![(seg(0, 0, 1, 1), vec![1.0])])
            .unwrap();
        let a = svg_current(&t, &NormSpec::l1(1), &[]);
        let b = svg_current(&t, &NormSpec::l1(1), &[]);
        assert_eq!(a, b);
    }

    #[test]
    fn theta_csv_reports_counts_and_costs() {
        let inst = MailingInstance::new(
            vec![Point::xy(0, 0), Point::xy(2, 0)],
            vec![0, 2, 0, 0],
        )
        .unwrap();
        let path = || LabeledPath {
            commodity: (0, 1),
            path: Polyline::new(vec![Point::xy(0, 0), Point::xy(2, 0)]).unwrap(),
        };
        let family = PathFamily::new(vec![path(), path()], inst).unwrap();
        let field = theta_pm(&family);
        let csv = csv_theta(&field, &PhiNorm::L1, Alpha::new(0.5).unwrap());
        let lines: Vec<&str> = csv.trim_end().split('\n').collect();
        assert_eq!(lines[0], "length,theta_minus,theta_plus,cost");
        assert_eq!(lines.len(), 2);
        // one atom of length 2 carrying two aligned units: cost = 2^(1/2)·2
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[0], "2");
        assert_eq!(fields[1], "0");
        assert_eq!(fields[2], "2");
        let cost: f64 = fields[3].parse().unwrap();
        assert!((cost - 2.0 * 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn current_csv_aggregates_signed_units() {
        let t = PolyCurrent1::new(
            4,
            Ring::Integer,
            vec![(seg(0, 0, 3, 0), vec![0.0, 2.0, -1.0, 0.0])],
        )
        .unwrap();
        let csv = csv_current(&t, &PhiNorm::Linf, Alpha::new(1.0).unwrap());
        let lines: Vec<&str> = csv.trim_end().split('\n').collect();
        assert_eq!(lines.len(), 2);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields, ["3", "1", "2", "6"]);
    }
}
