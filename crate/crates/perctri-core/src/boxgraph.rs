//! Near-to chains, root decomposition, local-root trees and the disjoint box
//! family built on them; plus the separating-rectangle construction.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, invariant, Result};
use crate::geometry::{annulus_index, dyadic_level, dyadic_radius, LatticeBox, Rect, Vertex};

/// Smallest `c ≥ 2` with `(τ−1)·2^(1−2c) ≤ 1/8` and `8τ·2^−(2c+4) < 1`.
pub fn choose_c(tau: u32) -> u32 {
    let tau = tau.max(1) as u128;
    let mut c = 2u32;
    loop {
        let p = 1u128 << (2 * c);
        if (tau - 1) * 16 <= p && tau < 2 * p {
            return c;
        }
        c += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexTuple {
    pub n: u32,
    pub vertices: Vec<Vertex>,
}

/// A local root; node 0 of each component is the component's root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub vertex: Vertex,
    /// Position in the sorted tuple.
    pub index: usize,
    /// Level in the tree (0 for the root).
    pub level: u32,
    /// Local annulus index relative to the parent (annulus index for the root).
    pub m: i32,
    pub parent: Option<usize>,
    /// Child local roots in order, as node ids.
    pub children: Vec<usize>,
    /// Tuple indices of the vertices chained to this local root (`W`).
    pub chained: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub root: usize,
    /// Tuple indices of `V_i`.
    pub members: Vec<usize>,
    pub nodes: Vec<GraphNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainGraph {
    pub n: u32,
    pub c: u32,
    /// The tuple sorted by annulus index (stable).
    pub vertices: Vec<Vertex>,
    pub j: Vec<u32>,
    pub components: Vec<Component>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyBox {
    pub component: usize,
    pub node: usize,
    pub vertex: Vertex,
    pub m: i32,
    pub radius: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxFamily {
    pub s: u32,
    pub boxes: Vec<FamilyBox>,
}

/// `‖v − u‖ ≤ 2^−(m+2c)·n`.
fn within(v: Vertex, u: Vertex, m: i32, c: u32, n: u32) -> bool {
    let d = v.dist(u) as i128;
    let k = m as i64 + 2 * c as i64;
    if k >= 0 {
        k < 120 && d << k <= n as i128 || d == 0
    } else {
        d <= (n as i128) << (-k).min(60)
    }
}

/// Indices in `set` from which a chain of the relation `rel(v, u)` (v near to u) leads to `target`.
fn chained_to(set: &[usize], target: usize, rel: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut reached = vec![target];
    let mut out = Vec::new();
    let mut head = 0;
    while head < reached.len() {
        let u = reached[head];
        head += 1;
        for &v in set {
            if v != target && !reached.contains(&v) && rel(v, u) {
                reached.push(v);
                out.push(v);
            }
        }
    }
    out.sort_unstable();
    out
}

impl ChainGraph {
    pub fn build(tuple: &VertexTuple, c: u32) -> Result<Self> {
        let n = tuple.n;
        if c < 2 {
            return invalid(format!("c must be at least 2, got {c}"));
        }
        if tuple.vertices.is_empty() {
            return invalid("empty tuple");
        }
        let mut idx: Vec<(u32, usize)> = Vec::new();
        for (k, v) in tuple.vertices.iter().enumerate() {
            idx.push((annulus_index(n, *v)?, k));
        }
        for a in 0..tuple.vertices.len() {
            for b in a + 1..tuple.vertices.len() {
                if tuple.vertices[a] == tuple.vertices[b] {
                    return invalid(format!("vertex {} appears twice", tuple.vertices[a]));
                }
            }
        }
        idx.sort_by_key(|&(j, k)| (j, k));
        let vertices: Vec<Vertex> = idx.iter().map(|&(_, k)| tuple.vertices[k]).collect();
        let j: Vec<u32> = idx.iter().map(|&(j, _)| j).collect();
        let tau = vertices.len();

        let near = |v: usize, u: usize| within(vertices[v], vertices[u], j[u] as i32, c, n);
        let mut assigned = vec![false; tau];
        let mut components = Vec::new();
        for e in 0..tau {
            if assigned[e] {
                continue;
            }
            assigned[e] = true;
            let all: Vec<usize> = (0..tau).collect();
            let members: Vec<usize> = chained_to(&all, e, near).into_iter().filter(|&v| !assigned[v]).collect();
            for &v in &members {
                assigned[v] = true;
            }
            let mut nodes = vec![GraphNode {
                vertex: vertices[e],
                index: e,
                level: 0,
                m: j[e] as i32,
                parent: None,
                children: Vec::new(),
                chained: members.clone(),
            }];
            decompose(&vertices, n, c, &members, 0, &mut nodes);
            components.push(Component { root: e, members, nodes });
        }
        Ok(ChainGraph { n, c, vertices, j, components })
    }

    /// Violations of the index inequalities (empty when all hold).
    pub fn index_violations(&self) -> Vec<String> {
        let c = self.c as i32;
        let mut out = Vec::new();
        for (ci, comp) in self.components.iter().enumerate() {
            for (k, node) in comp.nodes.iter().enumerate() {
                let mut prev: Option<i32> = None;
                for (pos, &ch) in node.children.iter().enumerate() {
                    let mc = comp.nodes[ch].m;
                    let need = if pos == 0 { node.m + 2 * c } else { node.m + c };
                    if mc < need {
                        out.push(format!("component {ci} node {k}: child {pos} has m={mc} < {need}"));
                    }
                    if let Some(p) = prev {
                        if mc > p {
                            out.push(format!("component {ci} node {k}: child indices increase ({p} then {mc})"));
                        }
                    }
                    prev = Some(mc);
                }
            }
        }
        out
    }

    /// Vertices chained to a first-level local root sit no further out than one
    /// annulus beyond it, relative to the component root.
    pub fn chain_proximity_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for comp in &self.components {
            let root = &comp.nodes[0];
            for &ch in &root.children {
                let w = &comp.nodes[ch];
                for &y in &w.chained {
                    let p = dyadic_level(self.n, self.vertices[y].dist(root.vertex));
                    if p < w.m - 1 {
                        out.push(format!("{} chained to {} lies in a_{p}, below m-1={}", self.vertices[y], w.vertex, w.m - 1));
                    }
                }
            }
        }
        out
    }

    /// The boxes `B(w, floor(2^−(m(w)+s)·n))`, with `s = 2c + 4`; fails if two
    /// boxes of one component, or two root boxes, intersect.
    pub fn disjoint_box_family(&self) -> Result<BoxFamily> {
        let s = 2 * self.c + 4;
        let mut boxes = Vec::new();
        for (ci, comp) in self.components.iter().enumerate() {
            for (k, node) in comp.nodes.iter().enumerate() {
                let m = node.children.first().map(|&ch| comp.nodes[ch].m).unwrap_or(node.m);
                let radius = dyadic_radius(self.n, m as i64 + s as i64);
                boxes.push(FamilyBox { component: ci, node: k, vertex: node.vertex, m, radius });
            }
        }
        for a in 0..boxes.len() {
            for b in a + 1..boxes.len() {
                let (p, q) = (&boxes[a], &boxes[b]);
                let related = p.component == q.component || (p.node == 0 && q.node == 0);
                if related && p.vertex.dist(q.vertex) <= p.radius as i64 + q.radius as i64 {
                    return invariant(format!(
                        "boxes B({}, {}) and B({}, {}) intersect",
                        p.vertex, p.radius, q.vertex, q.radius
                    ));
                }
            }
        }
        Ok(BoxFamily { s, boxes })
    }

    /// Sizes of the chained sets in depth-first order of local roots, per component.
    pub fn w_sizes(&self, component: usize) -> Vec<usize> {
        let comp = &self.components[component];
        let mut out = Vec::new();
        fn walk(comp: &Component, k: usize, out: &mut Vec<usize>) {
            for &ch in &comp.nodes[k].children {
                out.push(comp.nodes[ch].chained.len());
                walk(comp, ch, out);
            }
        }
        walk(comp, 0, &mut out);
        out
    }
}

/// Splits `set` into local roots and their chained sets relative to the locale
/// `nodes[parent]`, then recurses into each chained set.
fn decompose(vertices: &[Vertex], n: u32, c: u32, set: &[usize], parent: usize, nodes: &mut Vec<GraphNode>) {
    if set.is_empty() {
        return;
    }
    let locale = nodes[parent].vertex;
    let level = |v: usize| dyadic_level(n, vertices[v].dist(locale));
    let mut order: Vec<usize> = set.to_vec();
    order.sort_by_key(|&v| {
        let p = vertices[v];
        (-level(v), p.dist(locale), p.x, p.y)
    });
    let rel = |v: usize, u: usize| within(vertices[v], vertices[u], level(u), c, n);
    let mut taken = vec![false; vertices.len()];
    for &root in &order {
        if taken[root] {
            continue;
        }
        taken[root] = true;
        let rest: Vec<usize> = order.iter().copied().filter(|&v| !taken[v]).collect();
        let chained = chained_to(&rest, root, rel);
        for &v in &chained {
            taken[v] = true;
        }
        let id = nodes.len();
        nodes.push(GraphNode {
            vertex: vertices[root],
            index: root,
            level: nodes[parent].level + 1,
            m: level(root),
            parent: Some(parent),
            children: Vec::new(),
            chained: chained.clone(),
        });
        nodes[parent].children.push(id);
        decompose(vertices, n, c, &chained, id, nodes);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationInput {
    pub anchor: Vertex,
    pub boxes: Vec<LatticeBox>,
    /// Each box radius is divided by `2^shrink` before separating.
    pub shrink: u32,
    /// Fixed scale `D`; `None` means the largest centre distance `D_v`.
    pub scale: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatingRect {
    pub rect: Rect,
    pub scale: i64,
    pub half_short: f64,
    pub half_long: f64,
    pub center: (f64, f64),
    /// Shrunken boxes.
    pub shrunken: Vec<LatticeBox>,
    /// Whether each shrunken box lies inside the rectangle.
    pub inside: Vec<bool>,
}

impl SeparationInput {
    pub fn shrunken(&self) -> Vec<LatticeBox> {
        self.boxes.iter().map(|b| LatticeBox::new(b.center, b.radius >> self.shrink.min(31))).collect()
    }

    pub fn scale(&self) -> i64 {
        self.scale
            .unwrap_or_else(|| self.boxes.iter().map(|b| b.center.dist(self.anchor)).max().unwrap_or(0))
    }

    /// Sum of shrunken diameters is at most `D/16`.
    pub fn meets_diameter_condition(&self) -> bool {
        let sum: i64 = self.shrunken().iter().map(|b| 2 * b.radius as i64 + 1).sum();
        16 * sum <= self.scale()
    }

    /// Smallest shrink meeting the diameter condition at the given scale.
    pub fn with_minimal_shrink(mut self) -> Option<Self> {
        for k in 0..32 {
            self.shrink = k;
            if self.meets_diameter_condition() {
                return Some(self);
            }
        }
        None
    }
}

/// First (or last, with `take_max`) integer in `[lo, hi]` outside every forbidden interval.
fn valid_side(lo: i64, hi: i64, forbidden: &[(i64, i64)], take_max: bool) -> Option<i64> {
    let ok = |a: i64| !forbidden.iter().any(|&(f0, f1)| a >= f0 && a <= f1);
    if take_max {
        (lo..=hi).rev().find(|&a| ok(a))
    } else {
        (lo..=hi).find(|&a| ok(a))
    }
}

/// `ceil(p/q)` for positive `q`.
fn ceil_div(p: i64, q: i64) -> i64 {
    p.div_euclid(q) + (p.rem_euclid(q) != 0) as i64
}

/// A rectangle around the anchor whose sides avoid every shrunken box.
///
/// Returns `Ok(None)` when the diameter condition fails.
pub fn separating_rectangle(input: &SeparationInput) -> Result<Option<SeparatingRect>> {
    if input.boxes.is_empty() {
        return invalid("no boxes to separate");
    }
    for b in &input.boxes {
        if b.contains(input.anchor) {
            return invalid(format!("anchor {} lies in box B({}, {})", input.anchor, b.center, b.radius));
        }
    }
    if !input.meets_diameter_condition() {
        return Ok(None);
    }
    let d = input.scale();
    let boxes = input.shrunken();
    let x = input.anchor;
    let mut sides = [0i64; 4];
    let mut found = true;
    for (axis, base) in [(0usize, x.x as i64), (1, x.y as i64)] {
        let span = |b: &LatticeBox| {
            let c = if axis == 0 { b.center.x } else { b.center.y } as i64;
            (c - b.radius as i64, c + b.radius as i64)
        };
        let right: Vec<(i64, i64)> = boxes.iter().map(span).map(|(lo, hi)| (lo, hi - 1)).collect();
        let left: Vec<(i64, i64)> = boxes.iter().map(span).map(|(lo, hi)| (lo + 1, hi)).collect();
        let hi_side = valid_side(base + ceil_div(d, 10), base + (d / 5), &right, false);
        let lo_side = valid_side(base - d / 5, base - ceil_div(d, 10), &left, true);
        match (lo_side, hi_side) {
            (Some(a), Some(b)) => {
                sides[2 * axis] = a;
                sides[2 * axis + 1] = b;
            }
            _ => found = false,
        }
    }
    let rect = if found {
        Rect::new(sides[0] as i32, sides[1] as i32, sides[2] as i32, sides[3] as i32)
    } else {
        // Too small a scale for integer gaps: the anchor alone.
        Rect::new(x.x, x.x, x.y, x.y)
    };
    let hw = rect.width() as f64 / 2.0;
    let hh = rect.height() as f64 / 2.0;
    let inside: Vec<bool> = boxes.iter().map(|b| rect.contains_rect(&b.rect())).collect();
    Ok(Some(SeparatingRect {
        rect,
        scale: d,
        half_short: hw.min(hh),
        half_long: hw.max(hh),
        center: ((rect.x_min + rect.x_max) as f64 / 2.0, (rect.y_min + rect.y_max) as f64 / 2.0),
        shrunken: boxes,
        inside,
    }))
}

fn rects_disjoint(a: &Rect, b: &Rect) -> bool {
    a.x_max < b.x_min || b.x_max < a.x_min || a.y_max < b.y_min || b.y_max < a.y_min
}

/// Checks every postcondition of a separating rectangle; returns the failures.
pub fn separation_violations(input: &SeparationInput, out: &SeparatingRect) -> Vec<String> {
    let mut v = Vec::new();
    let d = out.scale as f64;
    let degenerate = out.rect.width() == 0 && out.rect.height() == 0;
    if !degenerate {
        if out.half_long > 2.0 * out.half_short {
            v.push(format!("aspect {} / {} exceeds 2", out.half_long, out.half_short));
        }
        if out.half_short < d / 10.0 {
            v.push(format!("short half-side {} below D/10 = {}", out.half_short, d / 10.0));
        }
    }
    let (cx, cy) = out.center;
    let off = (cx - input.anchor.x as f64).abs().max((cy - input.anchor.y as f64).abs());
    if off > d / 20.0 {
        v.push(format!("centre offset {off} exceeds D/20 = {}", d / 20.0));
    }
    if !out.rect.contains(input.anchor) {
        v.push("anchor outside the rectangle".into());
    }
    for (b, &ins) in out.shrunken.iter().zip(&out.inside) {
        let r = b.rect();
        let ok = if ins { out.rect.contains_rect(&r) } else { rects_disjoint(&out.rect, &r) };
        if !ok {
            v.push(format!("box B({}, {}) straddles the rectangle", b.center, b.radius));
        }
    }
    if input.scale.is_none() && out.inside.iter().all(|&i| i) {
        v.push("every box lies inside; the inside subset is not proper".into());
    }
    v
}

/// Every pair of rectangles is nested or disjoint.
pub fn nested_or_disjoint(rects: &[Rect]) -> bool {
    for (a, ra) in rects.iter().enumerate() {
        for rb in &rects[a + 1..] {
            if !(ra.contains_rect(rb) || rb.contains_rect(ra) || rects_disjoint(ra, rb)) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: i32, y: i32) -> Vertex {
        Vertex::new(x, y)
    }

    #[test]
    fn choose_c_values() {
        assert_eq!(choose_c(1), 2);
        assert_eq!(choose_c(2), 2);
        assert_eq!(choose_c(3), 3);
        for t in 1..40 {
            assert!(choose_c(t + 1) >= choose_c(t));
        }
    }

    #[test]
    fn three_vertex_examples() {
        // n = 2^16, c = 2: near radius for j = 0 is n/16 = 4096.
        let n = 1 << 16;
        let g = ChainGraph::build(&VertexTuple { n, vertices: vec![v(0, 0), v(100, 0), v(0, 200)] }, 2).unwrap();
        assert_eq!(g.components.len(), 1);
        assert_eq!(g.components[0].members, vec![1, 2]);

        let g = ChainGraph::build(&VertexTuple { n, vertices: vec![v(0, 0), v(10000, 0), v(-10000, 0)] }, 2).unwrap();
        assert_eq!(g.components.len(), 3);
        assert!(g.components.iter().all(|c| c.members.is_empty()));
        let fam = g.disjoint_box_family().unwrap();
        assert!(fam.boxes.iter().all(|b| b.m == 0));
    }

    #[test]
    fn single_chain_boxes() {
        let n = 1 << 16;
        let g = ChainGraph::build(&VertexTuple { n, vertices: vec![v(0, 0), v(300, 0)] }, 2).unwrap();
        let fam = g.disjoint_box_family().unwrap();
        assert_eq!(fam.boxes.len(), 2);
        assert_eq!(fam.boxes[0].radius, fam.boxes[1].radius);
        assert!(g.index_violations().is_empty());
    }

    #[test]
    fn figure_one_shape() {
        let n = 1 << 28;
        let a = (1 << 18) - (1 << 12);
        let b = (1 << 19) - (1 << 13);
        let w1 = v(a, 0);
        let w12 = w1 + v(512, 512);
        let w2 = v(-b, 0);
        let w21 = w2 + v(-512, 0);
        let w22 = w2 + v(-1024, -1024);
        let vertices = vec![
            v(0, 0),
            w1,
            w1 + v(256, 0),
            w12,
            w12 + v(2, 0),
            w2,
            w21,
            w21 + v(-1, 0),
            w21 + v(-2, 0),
            w22,
            w22 + v(-4, 0),
        ];
        let c = choose_c(11);
        assert_eq!(c, 4);
        let g = ChainGraph::build(&VertexTuple { n, vertices }, c).unwrap();
        assert_eq!(g.components.len(), 1);
        assert_eq!(g.components[0].members.len(), 10);
        assert_eq!(g.w_sizes(0), vec![3, 0, 1, 0, 5, 2, 0, 0, 1, 0]);
        assert!(g.index_violations().is_empty());
        assert!(g.chain_proximity_violations().is_empty());
        let fam = g.disjoint_box_family().unwrap();
        assert_eq!(fam.boxes.len(), 11);
        assert_eq!(fam.boxes[0].m, 10);
    }

    #[test]
    fn duplicate_vertices_rejected() {
        assert!(ChainGraph::build(&VertexTuple { n: 64, vertices: vec![v(1, 1), v(1, 1)] }, 2).is_err());
    }

    #[test]
    fn separation_single_box() {
        let input = SeparationInput { anchor: v(0, 0), boxes: vec![LatticeBox::new(v(1000, 0), 3)], shrink: 0, scale: None };
        let r = separating_rectangle(&input).unwrap().unwrap();
        assert!(separation_violations(&input, &r).is_empty());
        assert_eq!(r.inside, vec![false]);
    }

    #[test]
    fn nested_predicate() {
        let a = Rect::new(0, 10, 0, 10);
        let b = Rect::new(2, 3, 2, 3);
        let c = Rect::new(20, 30, 0, 10);
        assert!(nested_or_disjoint(&[a, b, c]));
        assert!(!nested_or_disjoint(&[a, Rect::new(5, 15, 5, 15)]));
    }
}
