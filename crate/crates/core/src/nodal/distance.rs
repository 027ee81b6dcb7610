use super::contour::{NodalSet, Point};
use super::field::wrap;
use crate::error::{Error, Result};
use crate::geometry::BundleGeometry;

/// A finite union of straight segments in `(s, fibre)` coordinates; points
/// are degenerate segments.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CurveSet {
    pub segments: Vec<(Point, Point)>,
}

impl CurveSet {
    pub fn from_nodal(n: &NodalSet) -> Self {
        Self {
            segments: n.segments.iter().map(|s| (s.a, s.b)).collect(),
        }
    }

    /// Whole fibres `{s} × F` over the given base points, in quarter pieces
    /// so that no piece is ambiguous under periodic wrap.
    pub fn fibres(geom: &BundleGeometry, base_points: &[f64]) -> Self {
        let (lo, hi) = geom.fibre_range();
        let step = 0.25 * (hi - lo);
        let segments = base_points
            .iter()
            .flat_map(|&s| (0..4).map(move |k| ((s, lo + k as f64 * step), (s, lo + (k + 1) as f64 * step))))
            .collect();
        Self { segments }
    }

    pub fn points(points: &[Point]) -> Self {
        Self {
            segments: points.iter().map(|&p| (p, p)).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// The `ε`-independent reference metric `g`: `ds² + a(s)²dt²` on the torus,
/// `ds² + du²` on the strip.
struct Metric<'a> {
    geom: &'a BundleGeometry,
    period: f64,
    fibre_period: Option<f64>,
}

impl Metric<'_> {
    fn fibre_scale(&self, s: f64) -> f64 {
        match self.geom {
            BundleGeometry::WarpedTorus(t) => t.warp.eval(s, 0),
            BundleGeometry::Waveguide(_) => 1.0,
        }
    }

    /// Minimal-image coordinate difference `q − p`.
    fn delta(&self, p: Point, q: Point) -> (f64, f64) {
        let ds = wrap(q.0 - p.0, self.period);
        let df = match self.fibre_period {
            Some(per) => wrap(q.1 - p.1, per),
            None => q.1 - p.1,
        };
        (ds, df)
    }

    fn length(&self, s_mid: f64, d: (f64, f64)) -> f64 {
        d.0.hypot(self.fibre_scale(s_mid) * d.1)
    }

    /// Distance from `p` to a segment, the metric frozen at the segment
    /// midpoint to locate the foot and at the `p`–foot midpoint to measure.
    fn point_segment(&self, p: Point, seg: &(Point, Point)) -> f64 {
        let (a, b) = *seg;
        let ab = self.delta(a, b);
        let sc = self.fibre_scale(a.0 + 0.5 * ab.0);
        let ap = self.delta(a, p);
        let len2 = ab.0 * ab.0 + sc * sc * ab.1 * ab.1;
        let t = if len2 > 0.0 {
            ((ap.0 * ab.0 + sc * sc * ap.1 * ab.1) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let d = (ap.0 - t * ab.0, ap.1 - t * ab.1);
        let foot_s = a.0 + t * ab.0;
        let p_s = foot_s + d.0;
        self.length(0.5 * (foot_s + p_s), d)
    }

    fn samples(&self, seg: &(Point, Point), spacing: f64, out: &mut Vec<Point>) {
        let (a, b) = *seg;
        let ab = self.delta(a, b);
        let len = self.length(a.0 + 0.5 * ab.0, ab);
        let pieces = (len / spacing).ceil().max(1.0) as usize;
        for k in 0..=pieces {
            let t = k as f64 / pieces as f64;
            out.push((a.0 + t * ab.0, a.1 + t * ab.1));
        }
    }

    fn directed(&self, from: &CurveSet, to: &CurveSet, spacing: f64) -> f64 {
        let mut samples = Vec::new();
        for seg in &from.segments {
            self.samples(seg, spacing, &mut samples);
        }
        // base-coordinate bounds give a cheap lower bound on each distance
        let boxes: Vec<(f64, f64)> = to
            .segments
            .iter()
            .map(|(a, b)| {
                let ds = wrap(b.0 - a.0, self.period);
                (a.0 + 0.5 * ds, 0.5 * ds.abs())
            })
            .collect();
        let mut worst: f64 = 0.0;
        for p in samples {
            let mut best = f64::INFINITY;
            for (seg, &(centre, half)) in to.segments.iter().zip(&boxes) {
                if wrap(p.0 - centre, self.period).abs() - half >= best {
                    continue;
                }
                best = best.min(self.point_segment(p, seg));
            }
            worst = worst.max(best);
        }
        worst
    }
}

/// Symmetric Hausdorff distance in the metric `g`, from samplings of both
/// sets at spacing at most `sampling`.
pub fn hausdorff_distance(a: &CurveSet, b: &CurveSet, geom: &BundleGeometry, sampling: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(sampling > 0.0) {
        return Err(Error::Config(format!("sampling must be positive, got {sampling}")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi) = geom.fibre_range();
    let metric = Metric {
        geom,
        period: geom.period(),
        fibre_period: geom.is_closed().then_some(hi - lo),
    };
    Ok(metric.directed(a, b, sampling).max(metric.directed(b, a, sampling)))
}
