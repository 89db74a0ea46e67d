//! Multi-arm events: annulus arms, restricted (tunnelling) arms, and ordered
//! three-arm events in half-planes and horseshoes.

use serde::{Deserialize, Serialize};

use crate::config::{Configuration, Grid, Marks};
use crate::error::{invalid, Result};
use crate::flow::{max_disjoint_paths, FlowScratch, Role, Source};
use crate::geometry::{make_horseshoe, restricted_rects, Horseshoe, LatticeBox, Rect, RestrictedRects, Side, Vertex};
use crate::percolation::{arm_to_side_idx, on_side_idx, rect_crossing_exists, two_disjoint_arms_idx, State};

const NIL: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArmVariant {
    /// Arms across `B(n) \ int(B(x, m))`.
    Annulus,
    /// Arms from `x` to named sides of `B(n)`, tunnelling through the side rectangles.
    Restricted,
    /// One open and two closed arms from the centre of the right edge of
    /// `B(x, m)` (which lies on the right side of `B(n)`) to the rest of its ring.
    HalfPlane,
    Horseshoe { rho: u32, nu: u32, side: Side },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub kappa: u8,
    pub pattern: Vec<State>,
    pub center: Vertex,
    pub inner: u32,
    pub outer: u32,
    pub variant: ArmVariant,
}

/// Default colour pattern for `kappa` arms.
pub fn default_pattern(kappa: u8) -> Vec<State> {
    use State::*;
    match kappa {
        2 => vec![Open, Closed],
        3 => vec![Open, Open, Closed],
        _ => vec![Open, Closed, Open, Closed],
    }
}

/// Parses a pattern such as `ooc` or `open,closed`.
pub fn parse_pattern(s: &str) -> Result<Vec<State>> {
    let mut out = Vec::new();
    let tokens: Vec<&str> = if s.contains(',') { s.split(',').collect() } else { s.split("").filter(|t| !t.is_empty()).collect() };
    for t in tokens {
        match t.trim().to_ascii_lowercase().as_str() {
            "o" | "open" => out.push(State::Open),
            "c" | "closed" => out.push(State::Closed),
            other => return invalid(format!("unknown arm colour {other:?}")),
        }
    }
    Ok(out)
}

impl ArmSpec {
    pub fn annulus(kappa: u8, center: Vertex, inner: u32, outer: u32) -> Self {
        ArmSpec { kappa, pattern: default_pattern(kappa), center, inner, outer, variant: ArmVariant::Annulus }
    }

    pub fn restricted(kappa: u8, center: Vertex, outer: u32) -> Self {
        let pattern = match kappa {
            2 => vec![State::Open, State::Closed],
            3 => vec![State::Open, State::Open, State::Closed],
            _ => vec![State::Open, State::Open, State::Closed, State::Closed],
        };
        ArmSpec { kappa, pattern, center, inner: 0, outer, variant: ArmVariant::Restricted }
    }

    /// Half-plane event on the box `B(x, m)` attached to the right side of `B(n)`.
    pub fn half_plane(center: Vertex, inner: u32, outer: u32) -> Self {
        ArmSpec {
            kappa: 3,
            pattern: vec![State::Closed, State::Open, State::Closed],
            center,
            inner,
            outer,
            variant: ArmVariant::HalfPlane,
        }
    }

    /// Horseshoe event; `center` is the centre of the inner box.
    pub fn horseshoe(center: Vertex, outer: u32, rho: u32, nu: u32, side: Side) -> Self {
        ArmSpec {
            kappa: 3,
            pattern: vec![State::Closed, State::Open, State::Closed],
            center,
            inner: 1 << rho,
            outer,
            variant: ArmVariant::Horseshoe { rho, nu, side },
        }
    }

    fn counts(&self) -> (u32, u32) {
        let open = self.pattern.iter().filter(|s| **s == State::Open).count() as u32;
        (open, self.pattern.len() as u32 - open)
    }

    pub fn validate(&self, config_n: u32) -> Result<()> {
        if !(2..=4).contains(&self.kappa) {
            return invalid(format!("kappa must be 2, 3 or 4, got {}", self.kappa));
        }
        if self.pattern.len() != self.kappa as usize {
            return invalid(format!("pattern has {} colours for kappa={}", self.pattern.len(), self.kappa));
        }
        if self.outer > config_n {
            return invalid(format!("outer radius {} exceeds configuration radius {config_n}", self.outer));
        }
        let (open, closed) = self.counts();
        match self.variant {
            ArmVariant::Annulus => {
                if self.center.norm() + self.inner as i64 >= self.outer as i64 {
                    return invalid(format!(
                        "B({}, {}) is not inside the interior of B({})",
                        self.center, self.inner, self.outer
                    ));
                }
            }
            ArmVariant::Restricted => {
                if self.outer != config_n {
                    return invalid("restricted events use the whole configuration box");
                }
                if self.outer < 4 {
                    return invalid(format!("restricted events need n >= 4, got {}", self.outer));
                }
                if self.center.norm() > (self.outer / 4) as i64 {
                    return invalid(format!("{} is not in B(n/4) for n={}", self.center, self.outer));
                }
                let want = match self.kappa {
                    2 => (1, 1),
                    3 => (2, 1),
                    _ => (2, 2),
                };
                if (open, closed) != want {
                    return invalid(format!("restricted kappa={} needs {} open and {} closed arms", self.kappa, want.0, want.1));
                }
            }
            ArmVariant::HalfPlane | ArmVariant::Horseshoe { .. } => {
                if self.kappa != 3 || (open, closed) != (1, 2) {
                    return invalid("ordered three-arm events need one open and two closed arms");
                }
                if let ArmVariant::HalfPlane = self.variant {
                    if self.inner == 0 || self.center.x as i64 + self.inner as i64 != self.outer as i64 {
                        return invalid(format!(
                            "box B({}, {}) is not attached to the right side of B({})",
                            self.center, self.inner, self.outer
                        ));
                    }
                    if self.center.y.unsigned_abs() + self.inner > self.outer {
                        return invalid("half-plane box does not fit in B(n)");
                    }
                }
            }
        }
        Ok(())
    }
}

/// Reusable buffers for arm detection.
#[derive(Debug, Default)]
pub struct ArmScratch {
    flow: FlowScratch,
    marks: Marks,
    queue: Vec<usize>,
    ring: Vec<usize>,
    label: Vec<u32>,
    touched: Vec<usize>,
}

impl ArmScratch {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Evaluates the event described by `spec` on `config`.
pub fn arm_event(config: &Configuration, spec: &ArmSpec) -> Result<bool> {
    arm_event_with(config, spec, &mut ArmScratch::new())
}

pub fn arm_event_with(config: &Configuration, spec: &ArmSpec, s: &mut ArmScratch) -> Result<bool> {
    spec.validate(config.n())?;
    let g = Grid::new(config.n());
    s.marks.ensure_len(g.len);
    Ok(match spec.variant {
        ArmVariant::Annulus => annulus_event(config, &g, spec, s),
        ArmVariant::Restricted => restricted_event(config, &g, spec, s),
        ArmVariant::HalfPlane => {
            let frame = ThreeArmFrame::half_plane(config.n(), LatticeBox::new(spec.center, spec.inner))?;
            frame.detect(config, s)
        }
        ArmVariant::Horseshoe { rho, nu, side } => {
            let h = make_horseshoe(spec.outer, spec.center, rho, nu, side)?;
            ThreeArmFrame::horseshoe(config.n(), &h).detect(config, s)
        }
    })
}

/// Annulus arm event `U_κ`: for each colour, as many vertex-disjoint crossings
/// of the annulus as the pattern asks for. Endpoints on the two rings are exempt
/// from the colour; interior vertices lie strictly between the rings.
pub fn annulus_arm_event(config: &Configuration, spec: &ArmSpec) -> Result<bool> {
    if spec.variant != ArmVariant::Annulus {
        return invalid("annulus_arm_event needs an annulus spec");
    }
    arm_event(config, spec)
}

fn annulus_event(config: &Configuration, g: &Grid, spec: &ArmSpec, s: &mut ArmScratch) -> bool {
    let (open, closed) = spec.counts();
    let x = spec.center;
    let m = spec.inner as i64;
    s.ring.clear();
    if m > 0 {
        for v in LatticeBox::new(x, spec.inner).vertices() {
            if x.dist(v) == m {
                s.ring.push(g.index(v).unwrap());
            }
        }
    }
    for (state, k) in [(State::Open, open), (State::Closed, closed)] {
        if k == 0 {
            continue;
        }
        let outer = spec.outer as i64;
        let role = |i: usize| {
            let v = g.vertex(i);
            let d = v.norm();
            if d > outer {
                Role::Blocked
            } else if d == outer {
                Role::Target(1)
            } else if x.dist(v) <= m || !state.matches(config.is_open_idx(i)) {
                Role::Blocked
            } else {
                Role::Interior
            }
        };
        let source = if m == 0 { Source::Single(g.index(x).unwrap()) } else { Source::Ring(&s.ring) };
        if max_disjoint_paths(g, role, source, [u32::MAX, 0], k, &mut s.flow) < k {
            return false;
        }
    }
    true
}

/// Restricted arm event `T_κ` (always centred in the configuration box).
pub fn restricted_arm_event(config: &Configuration, spec: &ArmSpec) -> Result<bool> {
    if spec.variant != ArmVariant::Restricted {
        return invalid("restricted_arm_event needs a restricted spec");
    }
    arm_event(config, spec)
}

fn in_z(v: Vertex, r: &Rect, vertical_strip: bool) -> bool {
    let in_strip = if vertical_strip { v.x >= r.x_min && v.x <= r.x_max } else { v.y >= r.y_min && v.y <= r.y_max };
    in_strip && !r.contains(v)
}

/// The rectangle crossings demanded by `T_κ`; they do not depend on the centre.
fn restricted_crossings_idx(config: &Configuration, g: &Grid, rects: &RestrictedRects, kappa: u8, s: &mut ArmScratch) -> bool {
    let mut cross = |rect: &Rect, state: State, horizontal: bool| {
        rect_crossing_exists(config, g, rect, state, horizontal, &mut s.marks, &mut s.queue)
    };
    match kappa {
        4 => {
            cross(&rects.r1, State::Open, false)
                && cross(&rects.r3, State::Open, false)
                && cross(&rects.r2, State::Closed, true)
                && cross(&rects.r4, State::Closed, true)
        }
        3 => {
            cross(&rects.r1, State::Open, false)
                && cross(&rects.r3, State::Open, false)
                && cross(&rects.r2, State::Closed, true)
        }
        _ => cross(&rects.s4, State::Open, true) && cross(&rects.s2, State::Closed, true),
    }
}

/// Whether the rectangle crossings of `T_κ(·, n)` hold in a configuration of radius `n`.
pub fn restricted_crossings(config: &Configuration, kappa: u8, s: &mut ArmScratch) -> Result<bool> {
    let n = config.n();
    if !(2..=4).contains(&kappa) {
        return invalid(format!("kappa must be 2, 3 or 4, got {kappa}"));
    }
    let rects = restricted_rects(n)?;
    let g = Grid::new(n);
    s.marks.ensure_len(g.len);
    Ok(restricted_crossings_idx(config, &g, &rects, kappa, s))
}

fn restricted_event(config: &Configuration, g: &Grid, spec: &ArmSpec, s: &mut ArmScratch) -> bool {
    let rects = restricted_rects(spec.outer).expect("validated");
    if !restricted_crossings_idx(config, g, &rects, spec.kappa, s) {
        return false;
    }
    let xi = g.index(spec.center).unwrap();
    let open_pair_region = |i: usize| {
        let v = g.vertex(i);
        !in_z(v, &rects.r1, true) && !in_z(v, &rects.r3, true)
    };
    let closed_pair_region = |i: usize| {
        let v = g.vertex(i);
        !in_z(v, &rects.r2, false) && !in_z(v, &rects.r4, false)
    };
    let side = |sd: Side| move |i: usize| on_side_idx(g, i, sd);
    match spec.kappa {
        4 => {
            two_disjoint_arms_idx(config, g, xi, State::Open, side(Side::Left), side(Side::Right), open_pair_region, &mut s.flow)
                && two_disjoint_arms_idx(
                    config,
                    g,
                    xi,
                    State::Closed,
                    side(Side::Bottom),
                    side(Side::Top),
                    closed_pair_region,
                    &mut s.flow,
                )
        }
        3 => {
            let bottom_region = |i: usize| !in_z(g.vertex(i), &rects.r2, false);
            two_disjoint_arms_idx(config, g, xi, State::Open, side(Side::Left), side(Side::Right), open_pair_region, &mut s.flow)
                && arm_to_side_idx(config, g, xi, State::Closed, Side::Bottom, bottom_region, &mut s.marks, &mut s.queue)
        }
        _ => {
            arm_to_side_idx(config, g, xi, State::Open, Side::Top, |_| true, &mut s.marks, &mut s.queue)
                && arm_to_side_idx(config, g, xi, State::Closed, Side::Bottom, |_| true, &mut s.marks, &mut s.queue)
        }
    }
}

/// Precomputed geometry for an ordered three-arm event. Arms run from the
/// `start` set through `region` to the ordered `target` boundary; endpoints are
/// exempt from the colour.
#[derive(Clone, Debug)]
pub struct ThreeArmFrame {
    n: u32,
    region: Vec<bool>,
    start: Vec<bool>,
    start_cells: Vec<usize>,
    target_pos: Vec<u32>,
    /// Closed arms must end at distinct start vertices (false when the start is a single point).
    distinct_start: bool,
}

impl ThreeArmFrame {
    fn build(n: u32, region: impl Fn(Vertex) -> bool, start: &[Vertex], target: &[Vertex], distinct_start: bool) -> Self {
        let g = Grid::new(n);
        let mut f = ThreeArmFrame {
            n,
            region: vec![false; g.len],
            start: vec![false; g.len],
            start_cells: Vec::new(),
            target_pos: vec![NIL; g.len],
            distinct_start,
        };
        for i in 0..g.len {
            f.region[i] = region(g.vertex(i));
        }
        for v in start {
            let i = g.index(*v).unwrap();
            f.start[i] = true;
            f.region[i] = false;
            f.start_cells.push(i);
        }
        for (k, v) in target.iter().enumerate() {
            let i = g.index(*v).unwrap();
            f.target_pos[i] = k as u32;
            f.region[i] = false;
        }
        f
    }

    /// Arms from the centre `y′` of the right edge of `b` to the ring of `b`
    /// minus that edge, inside `b`.
    pub fn half_plane(n: u32, b: LatticeBox) -> Result<Self> {
        let r = b.radius as i32;
        if r == 0 || b.center.x + r != n as i32 || b.center.y.unsigned_abs() + b.radius > n {
            return invalid(format!("box {b:?} is not attached to the right side of B({n})"));
        }
        let y = b.center + Vertex::new(r, 0);
        let ring: Vec<Vertex> = b.vertices().into_iter().filter(|v| b.on_ring(*v) && v.x != b.center.x + r).collect();
        let ordered = ccw_from_top_right(b, ring);
        Ok(Self::build(n, |v| b.contains(v), &[y], &ordered, false))
    }

    /// Arms from the inner boundary `∂_1H` to the outer boundary `∂_2H` through `H`.
    pub fn horseshoe(n: u32, h: &Horseshoe) -> Self {
        if h.rho == h.nu {
            return Self::build(n, |_| false, &[], &[], true);
        }
        Self::build(n, |v| h.contains(v), &h.inner_boundary, &h.outer_boundary, true)
    }

    pub fn detect(&self, config: &Configuration, s: &mut ArmScratch) -> bool {
        assert_eq!(config.n(), self.n, "frame built for a different box size");
        let g = Grid::new(self.n);
        if s.label.len() < g.len {
            s.label.resize(g.len, NIL);
        }
        // Per cluster: colour, target positions, start vertices.
        let mut clusters: Vec<(bool, Vec<u32>, Vec<usize>)> = Vec::new();
        for &st in &self.start_cells {
            let (nb, k) = g.neighbors(st);
            for &j in &nb[..k] {
                if self.target_pos[j] != NIL {
                    // Start and target adjacent: an arm with no interior, of either colour.
                    clusters.push((true, vec![self.target_pos[j]], vec![st]));
                    clusters.push((false, vec![self.target_pos[j]], vec![st]));
                }
                if !self.region[j] || s.label[j] != NIL {
                    continue;
                }
                let id = clusters.len() as u32;
                let colour = config.is_open_idx(j);
                let mut pos = Vec::new();
                let mut starts = Vec::new();
                s.label[j] = id;
                s.touched.push(j);
                s.queue.clear();
                s.queue.push(j);
                let mut head = 0;
                while head < s.queue.len() {
                    let u = s.queue[head];
                    head += 1;
                    let (nb2, k2) = g.neighbors(u);
                    for &w in &nb2[..k2] {
                        if self.target_pos[w] != NIL {
                            pos.push(self.target_pos[w]);
                        } else if self.start[w] {
                            starts.push(w);
                        } else if self.region[w] && s.label[w] == NIL && config.is_open_idx(w) == colour {
                            s.label[w] = id;
                            s.touched.push(w);
                            s.queue.push(w);
                        }
                    }
                }
                pos.sort_unstable();
                pos.dedup();
                starts.sort_unstable();
                starts.dedup();
                clusters.push((colour, pos, starts));
            }
        }
        for &t in &s.touched {
            s.label[t] = NIL;
        }
        s.touched.clear();

        let closed: Vec<&(bool, Vec<u32>, Vec<usize>)> = clusters.iter().filter(|c| !c.0 && !c.1.is_empty()).collect();
        for o in clusters.iter().filter(|c| c.0 && !c.1.is_empty()) {
            for &a1 in &o.1 {
                for (i, k) in closed.iter().enumerate() {
                    if k.1[0] >= a1 {
                        continue;
                    }
                    for (j, k2) in closed.iter().enumerate() {
                        if i == j || *k2.1.last().unwrap() <= a1 {
                            continue;
                        }
                        let distinct = k.2.len() > 1 || k2.2.len() > 1 || k.2 != k2.2;
                        if !self.distinct_start || distinct {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

/// Orders ring vertices of `b` (right edge removed) counterclockwise starting
/// next to the top-right corner.
fn ccw_from_top_right(b: LatticeBox, ring: Vec<Vertex>) -> Vec<Vertex> {
    let r = b.radius as i32;
    let c = b.center;
    let key = |v: &Vertex| {
        let d = *v - c;
        if d.y == r {
            (0, -d.x)
        } else if d.x == -r {
            (1, -d.y)
        } else {
            (2, d.x)
        }
    };
    let mut ring = ring;
    ring.sort_by_key(key);
    ring
}

/// Half-plane three-arm event on a box attached to the right side of `B(n)`.
pub fn halfplane_three_arm(config: &Configuration, rho_box: LatticeBox) -> Result<bool> {
    let frame = ThreeArmFrame::half_plane(config.n(), rho_box)?;
    Ok(frame.detect(config, &mut ArmScratch::new()))
}

/// Horseshoe three-arm event: closed, open, closed crossings of `H` in
/// counterclockwise order along `∂_2H`.
pub fn horseshoe_three_arm(config: &Configuration, h: &Horseshoe) -> Result<bool> {
    if h.n != config.n() {
        return invalid(format!("horseshoe built for B({}) but configuration is B({})", h.n, config.n()));
    }
    Ok(ThreeArmFrame::horseshoe(config.n(), h).detect(config, &mut ArmScratch::new()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_open_has_no_closed_arm() {
        let c = Configuration::all_open(4);
        assert!(!arm_event(&c, &ArmSpec::annulus(2, Vertex::ORIGIN, 1, 4)).unwrap());
        assert!(!arm_event(&c, &ArmSpec::restricted(3, Vertex::ORIGIN, 4)).unwrap());
        assert!(!halfplane_three_arm(&c, LatticeBox::new(Vertex::new(2, 0), 2)).unwrap());
    }

    #[test]
    fn spokes_give_four_arms() {
        // Open along the x axis, closed along the y axis.
        let c = Configuration::from_fn(5, |v| v.y == 0);
        assert!(arm_event(&c, &ArmSpec::annulus(4, Vertex::ORIGIN, 0, 5)).unwrap());
        assert!(arm_event(&c, &ArmSpec::annulus(4, Vertex::ORIGIN, 1, 5)).unwrap());
        assert!(!arm_event(&c, &ArmSpec::restricted(4, Vertex::ORIGIN, 5)).unwrap());
        // Open columns through R_1 and R_3 supply the vertical crossings.
        let c = Configuration::from_fn(5, |v| v.y == 0 || v.x.abs() == 4);
        assert!(arm_event(&c, &ArmSpec::restricted(4, Vertex::ORIGIN, 5)).unwrap());
        assert!(arm_event(&c, &ArmSpec::annulus(4, Vertex::ORIGIN, 0, 5)).unwrap());
    }

    #[test]
    fn trivial_at_radius_one() {
        let c = Configuration::all_open(1);
        assert!(arm_event(&c, &ArmSpec::annulus(4, Vertex::ORIGIN, 0, 1)).unwrap());
    }

    #[test]
    fn pattern_parsing() {
        assert_eq!(parse_pattern("ooc").unwrap(), vec![State::Open, State::Open, State::Closed]);
        assert_eq!(parse_pattern("open,closed").unwrap(), vec![State::Open, State::Closed]);
        assert!(parse_pattern("oxc").is_err());
    }

    #[test]
    fn invalid_specs() {
        let c = Configuration::all_open(4);
        assert!(arm_event(&c, &ArmSpec::annulus(4, Vertex::new(3, 0), 1, 4)).is_err());
        assert!(arm_event(&c, &ArmSpec::restricted(4, Vertex::new(2, 0), 4)).is_err());
        assert!(arm_event(&c, &ArmSpec::annulus(5, Vertex::ORIGIN, 0, 4)).is_err());
    }

    #[test]
    fn horseshoe_degenerate_and_corridors() {
        // rho = nu leaves nothing between the boxes.
        let c = Configuration::all_closed(4);
        let h = make_horseshoe(4, Vertex::new(0, 0), 2, 2, Side::Right).unwrap();
        assert!(!horseshoe_three_arm(&c, &h).unwrap());

        // Inner box B((6,0),2) in B(8): an open row splits the closed region into two.
        let h = make_horseshoe(8, Vertex::new(6, 0), 1, 3, Side::Right).unwrap();
        let c = Configuration::from_fn(8, |v| v.y == 0 && v.x < 4);
        assert!(horseshoe_three_arm(&c, &h).unwrap());
        assert!(!horseshoe_three_arm(&Configuration::all_closed(8), &h).unwrap());
        // Without the open row there is a single closed cluster.
        let c = Configuration::from_fn(8, |v| v.y == 0 && v.x < -2);
        assert!(!horseshoe_three_arm(&c, &h).unwrap());
    }
}
