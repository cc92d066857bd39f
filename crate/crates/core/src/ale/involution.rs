//! The anti-holomorphic involution `σ[z, w] = [z̄, w̄]` and the topology of its
//! fixed surface, assembled from four copies of the moment polygon.

use serde::Serialize;

use super::{AleParams, Sheet};
use crate::geometry::QuaternionicPoint;

pub fn sigma(p: &QuaternionicPoint) -> QuaternionicPoint {
    p.conj()
}

/// Differential of `σ` on interleaved lifts.
pub fn sigma_tangent(v: &[f64]) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(i, x)| if i % 2 == 1 { -x } else { *x })
        .collect()
}

/// The two pairs of sheets glued along edge `l_k`: `(++, -+), (+-, --)` when
/// `n - k` is odd and `(++, --), (+-, -+)` when it is even.
pub fn gluing_pairs(n: usize, k: usize) -> [(Sheet, Sheet); 2] {
    if (n as i64 - k as i64).rem_euclid(2) == 1 {
        [(Sheet::PP, Sheet::MP), (Sheet::PM, Sheet::MM)]
    } else {
        [(Sheet::PP, Sheet::MM), (Sheet::PM, Sheet::MP)]
    }
}

/// Distance between two real representatives modulo the real points of `K`
/// (sign changes `(z_i, w_i) ↦ (ζ_i z_i, ζ_i w_i)` with `Π ζ_i = 1`).
pub fn quotient_real_distance(p: &[f64], q: &[f64]) -> f64 {
    let m = p.len() / 4;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let mut d2 = 0.0;
        for i in 0..m {
            let s = if mask & (1 << i) != 0 { -1.0 } else { 1.0 };
            for idx in [2 * i, 2 * i + 1, 2 * (m + i), 2 * (m + i) + 1] {
                d2 += (p[idx] - s * q[idx]).powi(2);
            }
        }
        best = best.min(d2);
    }
    best.sqrt()
}

pub(crate) struct UnionFind(Vec<usize>);

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self((0..n).collect())
    }
    pub(crate) fn find(&mut self, i: usize) -> usize {
        let p = self.0[i];
        if p == i {
            return i;
        }
        let r = self.find(p);
        self.0[i] = r;
        r
    }
    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
    }
    pub(crate) fn classes(&mut self) -> usize {
        (0..self.0.len()).filter(|&i| self.find(i) == i).count()
    }
}

/// Topology of the fixed surface `M^σ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixedSurfaceTopology {
    pub n: usize,
    pub euler_characteristic: i64,
    pub holes: usize,
    pub genus: i64,
}

impl FixedSurfaceTopology {
    /// Each sheet is the polygon compactified by an arc at infinity: vertices
    /// `v_0..v_n` plus the two ideal ends of `l_0` and `l_{n+1}`, edges
    /// `l_0..l_{n+1}` plus the arc. Sheets are glued along every edge `l_k`
    /// by [`gluing_pairs`]; the four arcs at infinity form the boundary.
    pub fn compute(params: &AleParams) -> Self {
        let n = params.n();
        // Vertex slots per sheet: 0..=n finite, n+1 end of l_0, n+2 end of l_{n+1}.
        let vslots = n + 3;
        let vid = |s: Sheet, v: usize| s.index() * vslots + v;
        let eslots = n + 2;
        let eid = |s: Sheet, k: usize| s.index() * eslots + k;
        let mut verts = UnionFind::new(4 * vslots);
        let mut edges = UnionFind::new(4 * eslots);
        for k in 0..=n + 1 {
            for (s, t) in gluing_pairs(n, k) {
                edges.union(eid(s, k), eid(t, k));
                let ends: Vec<usize> = match k {
                    0 => vec![n + 1, 0],
                    k if k == n + 1 => vec![n, n + 2],
                    k => vec![k - 1, k],
                };
                for v in ends {
                    verts.union(vid(s, v), vid(t, v));
                }
            }
        }
        let v = verts.classes() as i64;
        let e = edges.classes() as i64 + 4;
        let f = 4i64;
        let chi = v - e + f;
        // Boundary: arcs at infinity connect the two ideal ends on each sheet.
        let mut ideal = UnionFind::new(4 * vslots);
        for s in Sheet::ALL {
            ideal.union(verts.find(vid(s, n + 1)), verts.find(vid(s, n + 2)));
        }
        let mut roots: Vec<usize> = Sheet::ALL
            .iter()
            .map(|&s| ideal.find(verts.find(vid(s, n + 1))))
            .collect();
        roots.sort_unstable();
        roots.dedup();
        let holes = roots.len();
        let genus = (2 - chi - holes as i64) / 2;
        Self {
            n,
            euler_characteristic: chi,
            holes,
            genus,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_n_topology() {
        let t1 = FixedSurfaceTopology::compute(&AleParams::unit(1).unwrap());
        assert_eq!((t1.genus, t1.holes), (0, 2));
        let t2 = FixedSurfaceTopology::compute(&AleParams::unit(2).unwrap());
        assert_eq!((t2.genus, t2.holes), (1, 1));
    }

    #[test]
    fn sigma_is_involution() {
        let v = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(sigma_tangent(&sigma_tangent(&v)), v);
    }
}
