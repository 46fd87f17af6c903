//! Nearest-boundary-point search.
//!
//! A [`SampleRing`] holds dense boundary samples in global-parameter order.
//! A query scans all samples, keeps the discrete local minima of the
//! distance, and polishes the promising ones with a root solve of
//! `⟨r(u) − x, r'(u)⟩ = 0` between the neighbouring samples.

use crate::boundary::BoundaryCurve;
use crate::error::Result;
use crate::geom::{periodic_gap, Vec2};
use crate::numeric::brent_root;

/// A nearest boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Foot {
    /// Global parameter in `[0, n_arcs)`.
    pub u: f64,
    /// Arclength coordinate.
    pub s: f64,
    pub point: Vec2,
    pub distance: f64,
}

/// Nearest point plus the distance gap to the best competitor at least
/// `separation` away in arclength (`∞` when there is none).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub foot: Foot,
    pub gap: f64,
}

/// Anything that can answer "which boundary point is closest to `x`".
pub trait Projector: Sync {
    fn curve(&self) -> &BoundaryCurve;

    fn nearest(&self, x: Vec2) -> Result<Foot>;

    /// Spatial resolution of the answers (grid spacing; 0 for exact search).
    fn resolution(&self) -> f64;
}

#[derive(Debug, Clone)]
pub struct SampleRing {
    u: Vec<f64>,
    s: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    n_arcs: usize,
    length: f64,
}

impl SampleRing {
    /// About `m` arclength-equispaced samples plus every arc junction.
    pub fn new(curve: &BoundaryCurve, m: usize) -> Result<Self> {
        let mut nodes: Vec<(f64, f64, Vec2)> = curve
            .resample_arclength(m)?
            .iter()
            .map(|p| (curve.global_param(p.arc, p.t), p.s, p.position))
            .collect();
        if curve.num_arcs() > 1 {
            for k in 0..curve.num_arcs() {
                let t0 = curve.arcs()[k].domain().0;
                nodes.push((k as f64, curve.arc_starts()[k], curve.derivs(k, t0).0));
            }
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        nodes.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-14);
        Ok(SampleRing {
            u: nodes.iter().map(|n| n.0).collect(),
            s: nodes.iter().map(|n| n.1).collect(),
            x: nodes.iter().map(|n| n.2.x).collect(),
            y: nodes.iter().map(|n| n.2.y).collect(),
            n_arcs: curve.num_arcs(),
            length: curve.length(),
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Mean arclength spacing.
    pub fn spacing(&self) -> f64 {
        self.length / self.u.len() as f64
    }

    pub fn point(&self, i: usize) -> Vec2 {
        Vec2::new(self.x[i], self.y[i])
    }

    pub fn param(&self, i: usize) -> f64 {
        self.u[i]
    }

    pub fn arclength(&self, i: usize) -> f64 {
        self.s[i]
    }

    /// Squared distances from `q` to every sample.
    pub fn dist2_into(&self, q: Vec2, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.x.iter().zip(&self.y).map(|(&x, &y)| {
            let dx = x - q.x;
            let dy = y - q.y;
            dx * dx + dy * dy
        }));
    }

    /// Index of the sample whose parameter is closest below `u`.
    pub fn index_below(&self, u: f64) -> usize {
        let u = u.rem_euclid(self.n_arcs as f64);
        match self.u.partition_point(|&v| v <= u) {
            0 => self.u.len() - 1,
            k => k - 1,
        }
    }

    /// Arclength at global parameter `u`, interpolated linearly between samples.
    pub fn s_at(&self, u: f64) -> f64 {
        let period = self.n_arcs as f64;
        let u = u.rem_euclid(period);
        let i = self.index_below(u);
        let j = (i + 1) % self.u.len();
        let (mut u0, mut s0) = (self.u[i], self.s[i]);
        let (mut u1, mut s1) = (self.u[j], self.s[j]);
        if j == 0 {
            u1 += period;
            s1 += self.length;
        }
        if u < u0 {
            u0 -= period;
            s0 -= self.length;
        }
        (s0 + (s1 - s0) * (u - u0) / (u1 - u0)).rem_euclid(self.length)
    }

    /// Polished local minimum of `|r(u) − x|` between the neighbours of sample `i`.
    pub fn refine(&self, curve: &BoundaryCurve, x: Vec2, i: usize) -> Foot {
        let m = self.u.len();
        let period = self.n_arcs as f64;
        let lo = if i == 0 { self.u[m - 1] - period } else { self.u[i - 1] };
        let hi = if i + 1 == m { self.u[0] + period } else { self.u[i + 1] };
        self.refine_between(curve, x, lo, hi)
    }

    /// Minimum of `|r(u) − x|` over `[lo, hi]` (unwrapped global parameters),
    /// assuming at most one interior critical point per arc piece.
    pub fn refine_between(&self, curve: &BoundaryCurve, x: Vec2, lo: f64, hi: f64) -> Foot {
        let mut cuts = vec![lo];
        let mut j = lo.floor() + 1.0;
        while j < hi {
            cuts.push(j);
            j += 1.0;
        }
        cuts.push(hi);

        let mut best = (f64::INFINITY, lo, Vec2::ZERO);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let k = a.floor();
            let arc = (k as i64).rem_euclid(self.n_arcs as i64) as usize;
            let (t0, t1) = curve.arcs()[arc].domain();
            let eval = |u: f64| {
                let t = t0 + (u - k).clamp(0.0, 1.0) * (t1 - t0);
                let (p, d1, _) = curve.derivs(arc, t);
                (p, d1 * (t1 - t0))
            };
            let g = |u: f64| {
                let (p, du) = eval(u);
                (p - x).dot(du)
            };
            let mut consider = |u: f64| {
                let p = eval(u).0;
                let d = p.dist(x);
                if d < best.0 {
                    best = (d, u, p);
                }
            };
            consider(a);
            consider(b);
            if g(a) < 0.0 && g(b) > 0.0 {
                if let Some(r) = brent_root(g, a, b, 1e-14 * (1.0 + b.abs())) {
                    consider(r);
                }
            }
        }
        let u = best.1.rem_euclid(self.n_arcs as f64);
        Foot { u, s: self.s_at(u), point: best.2, distance: best.0 }
    }

    /// Nearest point to `x`. When `separation` is given, the gap to the best
    /// local minimum at least that far away in arclength is also computed.
    /// Competitors more than `gap_cap` behind the nearest point are ignored,
    /// so a reported gap of `∞` means "larger than `gap_cap`".
    pub fn nearest(&self, curve: &BoundaryCurve, x: Vec2, separation: Option<f64>, gap_cap: f64) -> Nearest {
        let mut d2 = Vec::with_capacity(self.u.len());
        self.dist2_into(x, &mut d2);
        self.nearest_from(curve, x, &d2, separation, gap_cap)
    }

    pub(crate) fn nearest_from(
        &self,
        curve: &BoundaryCurve,
        x: Vec2,
        d2: &[f64],
        separation: Option<f64>,
        gap_cap: f64,
    ) -> Nearest {
        // Discrete minima within the sampling error of the best one are all
        // polished; the sampled distance overestimates a minimum by at most
        // about spacing² · curvature.
        let dmin = min_value(d2).sqrt();
        let spacing = self.spacing();
        let slack = spacing * spacing * (1.0 + 1.0 / dmin.max(spacing));
        let reach = dmin + slack + if separation.is_some() { gap_cap } else { 0.0 };
        let mut minima = local_minima(d2, reach * reach);
        minima.sort_by(|a, b| a.0.total_cmp(&b.0));
        let polished: Vec<Foot> = minima
            .iter()
            .take_while(|c| c.0 <= dmin + slack)
            .take(16)
            .map(|c| self.refine(curve, x, c.1))
            .collect();
        let foot = *polished
            .iter()
            .min_by(|a, b| a.distance.total_cmp(&b.distance))
            .expect("at least one local minimum");

        let gap = match separation {
            None => f64::INFINITY,
            Some(sep) => {
                let far = |s: f64| periodic_gap(s, foot.s, self.length) >= sep;
                let best_polished = polished
                    .iter()
                    .filter(|f| far(f.s))
                    .map(|f| f.distance)
                    .fold(f64::INFINITY, f64::min);
                let rival = minima.iter().find(|c| far(self.s[c.1]));
                let rival = match rival {
                    Some(&(d, i)) if d - foot.distance <= gap_cap + slack => {
                        let f = self.refine(curve, x, i);
                        if far(f.s) {
                            f.distance
                        } else {
                            d
                        }
                    }
                    Some(&(d, _)) => d,
                    None => f64::INFINITY,
                };
                (best_polished.min(rival) - foot.distance).max(0.0)
            }
        };
        Nearest { foot, gap }
    }
}

/// Minimum of a slice, with independent accumulators so the reduction is
/// not one long dependency chain.
fn min_value(v: &[f64]) -> f64 {
    let mut acc = [f64::INFINITY; 8];
    let chunks = v.chunks_exact(8);
    let rest = chunks.remainder();
    for c in chunks {
        for k in 0..8 {
            acc[k] = if c[k] < acc[k] { c[k] } else { acc[k] };
        }
    }
    rest.iter().chain(acc.iter()).fold(f64::INFINITY, |a, &b| if b < a { b } else { a })
}

/// Discrete periodic local minima `(distance, index)` of squared distances,
/// restricted to values at most `limit`.
fn local_minima(d2: &[f64], limit: f64) -> Vec<(f64, usize)> {
    let m = d2.len();
    let mut out = Vec::new();
    for (i, &v) in d2.iter().enumerate() {
        if v <= limit {
            let prev = if i == 0 { d2[m - 1] } else { d2[i - 1] };
            let next = if i + 1 == m { d2[0] } else { d2[i + 1] };
            if v <= prev && v <= next {
                out.push((v.sqrt(), i));
            }
        }
    }
    out
}

/// Exact projector: full scan of a dense ring for every query.
#[derive(Debug, Clone)]
pub struct ExactProjector<'a> {
    curve: &'a BoundaryCurve,
    ring: SampleRing,
}

impl<'a> ExactProjector<'a> {
    pub const DEFAULT_SAMPLES: usize = 4096;

    pub fn new(curve: &'a BoundaryCurve) -> Result<Self> {
        Self::with_samples(curve, Self::DEFAULT_SAMPLES)
    }

    pub fn with_samples(curve: &'a BoundaryCurve, m: usize) -> Result<Self> {
        Ok(ExactProjector { curve, ring: SampleRing::new(curve, m)? })
    }

    pub fn ring(&self) -> &SampleRing {
        &self.ring
    }

    /// Nearest point and the gap to the best competitor `separation` away.
    pub fn nearest_with_gap(&self, x: Vec2, separation: f64) -> Nearest {
        self.ring.nearest(self.curve, x, Some(separation), f64::INFINITY)
    }
}

impl Projector for ExactProjector<'_> {
    fn curve(&self) -> &BoundaryCurve {
        self.curve
    }

    fn nearest(&self, x: Vec2) -> Result<Foot> {
        Ok(self.ring.nearest(self.curve, x, None, 0.0).foot)
    }

    fn resolution(&self) -> f64 {
        0.0
    }
}
