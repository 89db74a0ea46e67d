//! Path, crossing and arm queries on a configuration.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::config::{Configuration, Grid, Marks};
use crate::error::{invalid, Result};
use crate::flow::{max_disjoint_paths, FlowScratch, Role, Source};
use crate::geometry::{Rect, Side, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    Open,
    Closed,
}

impl State {
    pub fn matches(self, open: bool) -> bool {
        (self == State::Open) == open
    }

    pub fn flip(self) -> State {
        match self {
            State::Open => State::Closed,
            State::Closed => State::Open,
        }
    }
}

/// Which path vertices must carry the queried state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndpointRule {
    /// Every vertex.
    Strict,
    /// Interior vertices only; the two endpoints are exempt.
    InteriorOnly,
}

#[derive(Clone, Debug)]
pub struct PathQuery {
    pub state: State,
    pub from: BTreeSet<Vertex>,
    pub to: BTreeSet<Vertex>,
    /// `None` means all of `B(n)`.
    pub region: Option<BTreeSet<Vertex>>,
    pub rule: EndpointRule,
}

fn mask_of(config: &Configuration, set: &BTreeSet<Vertex>, what: &str) -> Result<Vec<bool>> {
    let mut m = vec![false; config.len()];
    for v in set {
        match config.index(*v) {
            Some(i) => m[i] = true,
            None => return invalid(format!("{what} vertex {v} lies outside B({})", config.n())),
        }
    }
    Ok(m)
}

/// Whether a path as described by `q` exists.
pub fn connected(config: &Configuration, q: &PathQuery) -> Result<bool> {
    let from = mask_of(config, &q.from, "from")?;
    let to = mask_of(config, &q.to, "to")?;
    let region = match &q.region {
        Some(r) => mask_of(config, r, "region")?,
        None => vec![true; config.len()],
    };
    let g = Grid::new(config.n());
    let has_state = |i: usize| q.state.matches(config.is_open_idx(i));
    let mut seen = vec![false; g.len];
    let mut queue = VecDeque::new();
    for i in 0..g.len {
        if !(from[i] && region[i]) {
            continue;
        }
        if q.rule == EndpointRule::Strict && !has_state(i) {
            continue;
        }
        if to[i] {
            return Ok(true);
        }
        seen[i] = true;
        queue.push_back(i);
    }
    while let Some(u) = queue.pop_front() {
        let (nb, k) = g.neighbors(u);
        for &j in &nb[..k] {
            if seen[j] || !region[j] {
                continue;
            }
            let ok_state = has_state(j);
            if to[j] && (ok_state || q.rule == EndpointRule::InteriorOnly) {
                return Ok(true);
            }
            if ok_state {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    Ok(false)
}

pub(crate) fn on_side_idx(g: &Grid, i: usize, side: Side) -> bool {
    let (c, r) = g.col_row(i);
    let last = g.side - 1;
    match side {
        Side::Left => c == 0,
        Side::Right => c == last,
        Side::Bottom => r == 0,
        Side::Top => r == last,
    }
}

/// A chain `x, c_1, …, c_k` of state-`s` sites reaching `side`, with `x` exempt.
/// Only sites accepted by `allowed` are used for `c_i`.
pub(crate) fn arm_to_side_idx(
    config: &Configuration,
    g: &Grid,
    x: usize,
    state: State,
    side: Side,
    allowed: impl Fn(usize) -> bool,
    marks: &mut Marks,
    queue: &mut Vec<usize>,
) -> bool {
    if on_side_idx(g, x, side) {
        return true;
    }
    marks.clear();
    queue.clear();
    marks.set(x);
    queue.push(x);
    let mut head = 0;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        let (nb, k) = g.neighbors(u);
        for &j in &nb[..k] {
            if !marks.get(j) && allowed(j) && state.matches(config.is_open_idx(j)) {
                if on_side_idx(g, j, side) {
                    return true;
                }
                marks.set(j);
                queue.push(j);
            }
        }
    }
    false
}

/// `x` lies on `side`, or a closed chain joins a neighbour of `x` to `side`.
pub fn closed_arm_to_side(config: &Configuration, x: Vertex, side: Side) -> Result<bool> {
    let g = Grid::new(config.n());
    let Some(xi) = g.index(x) else {
        return invalid(format!("{x} is outside B({})", config.n()));
    };
    let mut marks = Marks::with_len(g.len);
    let mut queue = Vec::new();
    Ok(arm_to_side_idx(config, &g, xi, State::Closed, side, |_| true, &mut marks, &mut queue))
}

fn check_rect(config: &Configuration, rect: &Rect) -> Result<()> {
    let n = config.n() as i32;
    if !Rect::new(-n, n, -n, n).contains_rect(rect) {
        return invalid(format!("rectangle {rect:?} is not inside B({n})"));
    }
    Ok(())
}

/// Breadth-first search for a STRICT monochrome path inside `rect` from the
/// sites accepted by `start` to those accepted by `goal`. Returns the path.
fn rect_path(
    config: &Configuration,
    g: &Grid,
    rect: &Rect,
    state: State,
    start: impl Fn(Vertex) -> bool,
    goal: impl Fn(Vertex) -> bool,
) -> Option<Vec<Vertex>> {
    let mut parent = vec![usize::MAX; g.len];
    let mut queue = VecDeque::new();
    for v in rect.vertices() {
        if start(v) {
            let i = g.index(v).unwrap();
            if state.matches(config.is_open_idx(i)) {
                parent[i] = i;
                queue.push_back(i);
            }
        }
    }
    while let Some(u) = queue.pop_front() {
        let uv = g.vertex(u);
        if goal(uv) {
            let mut path = vec![uv];
            let mut cur = u;
            while parent[cur] != cur {
                cur = parent[cur];
                path.push(g.vertex(cur));
            }
            path.reverse();
            return Some(path);
        }
        let (nb, k) = g.neighbors(u);
        for &j in &nb[..k] {
            if parent[j] == usize::MAX && rect.contains(g.vertex(j)) && state.matches(config.is_open_idx(j)) {
                parent[j] = u;
                queue.push_back(j);
            }
        }
    }
    None
}

/// A path of `state` sites inside `rect` from its left column to its right column.
pub fn horizontal_crossing(config: &Configuration, rect: &Rect, state: State) -> Result<Option<Vec<Vertex>>> {
    check_rect(config, rect)?;
    let g = Grid::new(config.n());
    Ok(rect_path(config, &g, rect, state, |v| v.x == rect.x_min, |v| v.x == rect.x_max))
}

/// A path of `state` sites inside `rect` from its bottom row to its top row.
pub fn vertical_crossing(config: &Configuration, rect: &Rect, state: State) -> Result<Option<Vec<Vertex>>> {
    check_rect(config, rect)?;
    let g = Grid::new(config.n());
    Ok(rect_path(config, &g, rect, state, |v| v.y == rect.y_min, |v| v.y == rect.y_max))
}

/// Existence-only crossing test for hot loops.
pub(crate) fn rect_crossing_exists(
    config: &Configuration,
    g: &Grid,
    rect: &Rect,
    state: State,
    horizontal: bool,
    marks: &mut Marks,
    queue: &mut Vec<usize>,
) -> bool {
    marks.clear();
    queue.clear();
    let n = g.n;
    let (c0, c1, r0, r1) = (
        (rect.x_min + n) as usize,
        (rect.x_max + n) as usize,
        (rect.y_min + n) as usize,
        (rect.y_max + n) as usize,
    );
    let starts: Vec<usize> = if horizontal {
        (r0..=r1).map(|r| g.at(c0, r)).collect()
    } else {
        (c0..=c1).map(|c| g.at(c, r0)).collect()
    };
    for i in starts {
        if state.matches(config.is_open_idx(i)) {
            marks.set(i);
            queue.push(i);
        }
    }
    let mut head = 0;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        let (c, r) = g.col_row(u);
        if (horizontal && c == c1) || (!horizontal && r == r1) {
            return true;
        }
        let (nb, k) = g.neighbors(u);
        for &j in &nb[..k] {
            let (cj, rj) = g.col_row(j);
            if cj >= c0 && cj <= c1 && rj >= r0 && rj <= r1 && !marks.get(j) && state.matches(config.is_open_idx(j)) {
                marks.set(j);
                queue.push(j);
            }
        }
    }
    false
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Constrained within the vertical strip over the rectangle.
    H,
    /// Constrained within the horizontal strip beside the rectangle.
    V,
}

/// Every path vertex inside the strip spanned by `rect` (vertical strip for `H`,
/// horizontal for `V`) lies in `rect`.
pub fn tunnels(path: &[Vertex], rect: &Rect, orientation: Orientation) -> bool {
    path.iter().all(|v| {
        let in_strip = match orientation {
            Orientation::H => v.x >= rect.x_min && v.x <= rect.x_max,
            Orientation::V => v.y >= rect.y_min && v.y <= rect.y_max,
        };
        !in_strip || rect.contains(*v)
    })
}

/// Two paths from `x`, one ending in `target_a` and one in `target_b`, sharing
/// only `x`, with every other vertex of `state` and in `region` (`None` = `B(n)`).
pub fn two_disjoint_arms(
    config: &Configuration,
    x: Vertex,
    state: State,
    target_a: &BTreeSet<Vertex>,
    target_b: &BTreeSet<Vertex>,
    region: Option<&BTreeSet<Vertex>>,
) -> Result<bool> {
    let g = Grid::new(config.n());
    let Some(xi) = g.index(x) else {
        return invalid(format!("{x} is outside B({})", config.n()));
    };
    let a = mask_of(config, target_a, "target")?;
    let b = mask_of(config, target_b, "target")?;
    let reg = match region {
        Some(r) => mask_of(config, r, "region")?,
        None => vec![true; g.len],
    };
    if !reg[xi] {
        return invalid(format!("{x} is not in the region"));
    }
    let mut s = FlowScratch::new();
    Ok(two_disjoint_arms_idx(config, &g, xi, state, |i| a[i], |i| b[i], |i| reg[i], &mut s))
}

pub(crate) fn two_disjoint_arms_idx(
    config: &Configuration,
    g: &Grid,
    x: usize,
    state: State,
    in_a: impl Fn(usize) -> bool,
    in_b: impl Fn(usize) -> bool,
    region: impl Fn(usize) -> bool,
    scratch: &mut FlowScratch,
) -> bool {
    let usable = |i: usize| i != x && region(i) && state.matches(config.is_open_idx(i));
    let (xa, xb) = (in_a(x), in_b(x));
    if xa && xb {
        return true;
    }
    if xa || xb {
        // The trivial chain covers one target; one ordinary arm must reach the other.
        let other = |i: usize| if xa { in_b(i) } else { in_a(i) };
        let role = |i: usize| {
            if !usable(i) {
                Role::Blocked
            } else if other(i) {
                Role::Target(1)
            } else {
                Role::Interior
            }
        };
        return max_disjoint_paths(g, role, Source::Single(x), [1, 0], 1, scratch) >= 1;
    }
    let role = |i: usize| {
        if !usable(i) {
            return Role::Blocked;
        }
        let mask = in_a(i) as u8 | ((in_b(i) as u8) << 1);
        if mask != 0 {
            Role::Target(mask)
        } else {
            Role::Interior
        }
    };
    max_disjoint_paths(g, role, Source::Single(x), [1, 1], 2, scratch) >= 2
}
