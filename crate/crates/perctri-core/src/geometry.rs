//! Integer geometry of the triangular lattice realised on Z².
//!
//! Adjacency is the square-lattice adjacency plus the `(1,-1)` / `(-1,1)`
//! diagonals. Distances are Chebyshev (`max(|x|, |y|)`).

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Offsets of the six lattice neighbours.
pub const NEIGHBOR_OFFSETS: [(i32, i32); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub x: i32,
    pub y: i32,
}

impl Vertex {
    pub const ORIGIN: Vertex = Vertex { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Vertex { x, y }
    }

    /// Chebyshev norm.
    pub fn norm(self) -> i64 {
        (self.x as i64).abs().max((self.y as i64).abs())
    }

    pub fn dist(self, other: Vertex) -> i64 {
        (other - self).norm()
    }

    pub fn neighbors(self) -> [Vertex; 6] {
        NEIGHBOR_OFFSETS.map(|(dx, dy)| Vertex::new(self.x + dx, self.y + dy))
    }

    pub fn is_adjacent(self, other: Vertex) -> bool {
        let d = other - self;
        NEIGHBOR_OFFSETS.contains(&(d.x, d.y))
    }

    /// Rotation by a quarter turn counterclockwise, `k` times. This is a
    /// symmetry of Z² but not of the lattice; it is only used for region shapes.
    pub fn rotate_quarter(self, k: u32) -> Vertex {
        let mut v = self;
        for _ in 0..(k % 4) {
            v = Vertex::new(-v.y, v.x);
        }
        v
    }
}

impl Add for Vertex {
    type Output = Vertex;
    fn add(self, o: Vertex) -> Vertex {
        Vertex::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vertex {
    type Output = Vertex;
    fn sub(self, o: Vertex) -> Vertex {
        Vertex::new(self.x - o.x, self.y - o.y)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

pub fn neighbors(v: Vertex) -> [Vertex; 6] {
    v.neighbors()
}

/// Sides of a box, numbered counterclockwise from the left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left = 1,
    Bottom = 2,
    Right = 3,
    Top = 4,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Bottom, Side::Right, Side::Top];

    pub fn from_index(i: u8) -> Option<Side> {
        match i {
            1 => Some(Side::Left),
            2 => Some(Side::Bottom),
            3 => Some(Side::Right),
            4 => Some(Side::Top),
            _ => None,
        }
    }

    /// Quarter turns taking the right side onto this side.
    fn quarter_turns_from_right(self) -> u32 {
        match self {
            Side::Right => 0,
            Side::Top => 1,
            Side::Left => 2,
            Side::Bottom => 3,
        }
    }
}

/// The box `B(center, radius)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    pub center: Vertex,
    pub radius: u32,
}

impl LatticeBox {
    pub fn new(center: Vertex, radius: u32) -> Self {
        LatticeBox { center, radius }
    }

    /// `B(r)` centred at the origin.
    pub fn centered(radius: u32) -> Self {
        LatticeBox::new(Vertex::ORIGIN, radius)
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.center.dist(v) <= self.radius as i64
    }

    /// Vertices of the box boundary ring (distance exactly `radius`).
    pub fn on_ring(&self, v: Vertex) -> bool {
        self.center.dist(v) == self.radius as i64
    }

    pub fn len(&self) -> usize {
        let s = 2 * self.radius as usize + 1;
        s * s
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rect(&self) -> Rect {
        let r = self.radius as i32;
        Rect::new(self.center.x - r, self.center.x + r, self.center.y - r, self.center.y + r)
    }

    /// Row-major vertex list from the lower-left corner.
    pub fn vertices(&self) -> Vec<Vertex> {
        self.rect().vertices()
    }

    /// Whether `v` lies on the given side (corners belong to both incident sides).
    pub fn on_side(&self, v: Vertex, side: Side) -> bool {
        self.rect().on_side(v, side)
    }

    pub fn side_vertices(&self, side: Side) -> Vec<Vertex> {
        self.rect().side_vertices(side)
    }
}

/// Axis-parallel rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: i32,
    pub x_max: i32,
    pub y_min: i32,
    pub y_max: i32,
}

impl Rect {
    pub fn new(x_min: i32, x_max: i32, y_min: i32, y_max: i32) -> Self {
        debug_assert!(x_min <= x_max && y_min <= y_max);
        Rect { x_min, x_max, y_min, y_max }
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.x >= self.x_min && v.x <= self.x_max && v.y >= self.y_min && v.y <= self.y_max
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        o.x_min >= self.x_min && o.x_max <= self.x_max && o.y_min >= self.y_min && o.y_max <= self.y_max
    }

    pub fn width(&self) -> i32 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> i32 {
        self.y_max - self.y_min
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        let mut out = Vec::with_capacity(((self.width() + 1) * (self.height() + 1)) as usize);
        for y in self.y_min..=self.y_max {
            for x in self.x_min..=self.x_max {
                out.push(Vertex::new(x, y));
            }
        }
        out
    }

    pub fn on_side(&self, v: Vertex, side: Side) -> bool {
        self.contains(v)
            && match side {
                Side::Left => v.x == self.x_min,
                Side::Right => v.x == self.x_max,
                Side::Bottom => v.y == self.y_min,
                Side::Top => v.y == self.y_max,
            }
    }

    pub fn side_vertices(&self, side: Side) -> Vec<Vertex> {
        match side {
            Side::Left => (self.y_min..=self.y_max).map(|y| Vertex::new(self.x_min, y)).collect(),
            Side::Right => (self.y_min..=self.y_max).map(|y| Vertex::new(self.x_max, y)).collect(),
            Side::Bottom => (self.x_min..=self.x_max).map(|x| Vertex::new(x, self.y_min)).collect(),
            Side::Top => (self.x_min..=self.x_max).map(|x| Vertex::new(x, self.y_max)).collect(),
        }
    }
}

/// `∂X`: the vertices of `X` with at least one neighbour outside `X`.
pub fn boundary(set: &BTreeSet<Vertex>) -> BTreeSet<Vertex> {
    set.iter()
        .copied()
        .filter(|v| v.neighbors().iter().any(|u| !set.contains(u)))
        .collect()
}

/// `X \ ∂X`.
pub fn interior(set: &BTreeSet<Vertex>) -> BTreeSet<Vertex> {
    set.iter()
        .copied()
        .filter(|v| v.neighbors().iter().all(|u| set.contains(u)))
        .collect()
}

/// Smallest `j` with `2^-j · n ≤ 1`.
pub fn j0(n: u32) -> u32 {
    let mut j = 0;
    while (1u64 << j) < n as u64 {
        j += 1;
    }
    j
}

/// `floor(2^-k · n)`, the integer radius used for dyadic boxes.
pub fn dyadic_radius(n: u32, k: i64) -> u32 {
    if k <= 0 {
        return (n as u64).saturating_mul(1u64 << (-k).min(32)) as u32;
    }
    if k >= 64 {
        return 0;
    }
    (n as u64 >> k) as u32
}

/// `d ≤ 2^-k · n`, evaluated exactly.
fn within_dyadic(d: i64, n: u32, k: i64) -> bool {
    let d = d as i128;
    let n = n as i128;
    if k >= 0 {
        if k >= 100 {
            return d == 0;
        }
        d << k <= n
    } else {
        d <= n << (-k).min(100)
    }
}

fn check_in_box(n: u32, v: Vertex) -> Result<()> {
    if v.norm() > n as i64 {
        return invalid(format!("vertex {v} is outside B({n})"));
    }
    Ok(())
}

/// Index `j` of the dyadic annulus `A_j` of `B(n)` containing `v`.
///
/// `A_0 = B(n/2)`, `A_j = B((1-2^-(j+1))n) \ B((1-2^-j)n)` for `0 < j < j0`
/// and `A_{j0} = ∂B(n)`.
pub fn annulus_index(n: u32, v: Vertex) -> Result<u32> {
    check_in_box(n, v)?;
    let j0 = j0(n);
    let r = v.norm() as i128;
    let n128 = n as i128;
    if r == n128 {
        return Ok(j0);
    }
    for j in 0..j0 {
        // r ≤ (1 - 2^-(j+1)) n  ⟺  2^(j+1) r ≤ (2^(j+1) - 1) n
        let p = 1i128 << (j + 1);
        if p * r <= (p - 1) * n128 {
            return Ok(j);
        }
    }
    Ok(j0)
}

/// The dyadic annulus partition of `B(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnnulusPartition {
    pub n: u32,
    pub j0: u32,
}

impl AnnulusPartition {
    pub fn new(n: u32) -> Self {
        AnnulusPartition { n, j0: j0(n) }
    }

    pub fn index_of(&self, v: Vertex) -> Result<u32> {
        annulus_index(self.n, v)
    }

    /// The cells `A_0, …, A_{j0}` as vertex lists.
    pub fn cells(&self) -> Vec<Vec<Vertex>> {
        let mut cells = vec![Vec::new(); self.j0 as usize + 1];
        for v in LatticeBox::centered(self.n).vertices() {
            let j = annulus_index(self.n, v).expect("vertex of B(n)");
            cells[j as usize].push(v);
        }
        cells
    }
}

/// Index `j*` of the dual cell `A*_{j*}` containing `v`.
///
/// `B*(j*) = {v : min(|x|,|y|) ≤ (1 - 2^-(j*+1)) n}`. The four corners, which
/// no `B*(j*)` reaches, form the last cell `j* = j0`.
pub fn dual_index(n: u32, v: Vertex) -> Result<u32> {
    check_in_box(n, v)?;
    let j0 = j0(n);
    let m = (v.x as i128).abs().min((v.y as i128).abs());
    let n128 = n as i128;
    for j in 0..=j0 {
        let p = 1i128 << (j + 1);
        if p * m <= (p - 1) * n128 {
            return Ok(j);
        }
    }
    Ok(j0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualPartition {
    pub n: u32,
}

impl DualPartition {
    pub fn new(n: u32) -> Self {
        DualPartition { n }
    }

    pub fn index_of(&self, v: Vertex) -> Result<u32> {
        dual_index(self.n, v)
    }

    pub fn max_index(&self) -> u32 {
        j0(self.n)
    }
}

/// Dyadic level of a distance `d` relative to `n`: `j0` when `d ≤ 2^-j0 · n`,
/// otherwise the unique `m` (possibly negative) with `2^-(m+1) n < d ≤ 2^-m n`.
pub fn dyadic_level(n: u32, d: i64) -> i32 {
    let j0 = j0(n) as i64;
    if within_dyadic(d, n, j0) {
        return j0 as i32;
    }
    let mut m = j0 - 1;
    while !within_dyadic(d, n, m) {
        m -= 1;
    }
    m as i32
}

/// Index `m` of the local annulus `a_m(x)` containing `y`, for a base vertex in `A_j`.
///
/// `a_m(x) = B(x, 2^-m n) \ B(x, 2^-(m+1) n)` for `j+2 ≤ m < j0` and
/// `a_{j0}(x) = B(x, 2^-j0 n)`; their union is `B(x, 2^-(j+2) n)`.
pub fn local_annulus_index(x: Vertex, j: u32, n: u32, y: Vertex) -> Result<u32> {
    let j0 = j0(n);
    let top = (j + 2).min(j0) as i64;
    let d = x.dist(y);
    if !within_dyadic(d, n, top) {
        return invalid(format!("{y} lies outside the local annuli of {x} (j={j}, n={n})"));
    }
    Ok(dyadic_level(n, d) as u32)
}

/// Vertices of `a_m(x)` (no restriction to `B(n)`).
pub fn local_annulus(x: Vertex, m: u32, n: u32) -> Vec<Vertex> {
    let r = dyadic_radius(n, m as i64);
    LatticeBox::new(x, r)
        .vertices()
        .into_iter()
        .filter(|y| dyadic_level(n, x.dist(*y)) == m as i32)
        .collect()
}

/// A horseshoe `H = B_2 \ B_1` attached to a side of `B(n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horseshoe {
    pub n: u32,
    pub rho: u32,
    pub nu: u32,
    pub side: Side,
    pub inner: LatticeBox,
    pub outer: LatticeBox,
    /// `∂_1H`, counterclockwise from one end of the removed edge to the other.
    pub inner_boundary: Vec<Vertex>,
    /// `∂_2H`, same orientation.
    pub outer_boundary: Vec<Vertex>,
}

impl Horseshoe {
    /// Membership in `H = B_2 \ B_1`.
    pub fn contains(&self, v: Vertex) -> bool {
        self.outer.contains(v) && !self.inner.contains(v)
    }

    pub fn region(&self) -> Vec<Vertex> {
        self.outer.vertices().into_iter().filter(|v| !self.inner.contains(*v)).collect()
    }

    /// Centre of the inner box's attached edge.
    pub fn anchor(&self) -> Vertex {
        attached_edge_center(self.inner, self.side)
    }
}

fn attached_edge_center(b: LatticeBox, side: Side) -> Vertex {
    let r = b.radius as i32;
    Vertex::new(r, 0).rotate_quarter(side.quarter_turns_from_right()) + b.center
}

/// The ring of `B(c, r)` with its right edge removed, listed counterclockwise
/// from the top-right end to the bottom-right end (canonical frame).
fn open_ring_right(c: Vertex, r: i32) -> Vec<Vertex> {
    let mut out = Vec::new();
    if r == 0 {
        return out;
    }
    let right = c.x + r;
    for x in (c.x - r..right).rev() {
        out.push(Vertex::new(x, c.y + r));
    }
    for y in (c.y - r + 1..c.y + r).rev() {
        out.push(Vertex::new(c.x - r, y));
    }
    for x in c.x - r..right {
        out.push(Vertex::new(x, c.y - r));
    }
    out
}

/// Build the horseshoe `H(ρ, ν)`: `B_1 = B(center, 2^ρ)` with its `side` edge on
/// `∂B(n)`, and `B_2` of radius `2^ν` sharing that edge line, centred on the same axis.
pub fn make_horseshoe(n: u32, center: Vertex, rho: u32, nu: u32, side: Side) -> Result<Horseshoe> {
    if rho > nu || nu > 30 {
        return invalid(format!("need rho <= nu (rho={rho}, nu={nu})"));
    }
    let r = 1i64 << rho;
    let big = 1i64 << nu;
    if big > n as i64 {
        return invalid(format!("outer radius 2^{nu} exceeds n={n}"));
    }
    let k = side.quarter_turns_from_right();
    let canon = center.rotate_quarter(4 - k);
    if canon.x as i64 + r != n as i64 {
        return invalid(format!("inner box at {center} with radius {r} is not attached to side {side:?} of B({n})"));
    }
    if (canon.y as i64).abs() + big > n as i64 {
        return invalid(format!("outer box of radius {big} does not fit in B({n})"));
    }
    let c1 = canon;
    let c2 = Vertex::new(n as i32 - big as i32, canon.y);
    let rot = |v: Vertex| v.rotate_quarter(k);
    Ok(Horseshoe {
        n,
        rho,
        nu,
        side,
        inner: LatticeBox::new(rot(c1), r as u32),
        outer: LatticeBox::new(rot(c2), big as u32),
        inner_boundary: open_ring_right(c1, r as i32).into_iter().map(rot).collect(),
        outer_boundary: open_ring_right(c2, big as i32).into_iter().map(rot).collect(),
    })
}

/// The rectangles used by the restricted arm events; `n/2` is floored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictedRects {
    pub r1: Rect,
    pub r2: Rect,
    pub r3: Rect,
    pub r4: Rect,
    pub s2: Rect,
    pub s4: Rect,
}

pub fn restricted_rects(n: u32) -> Result<RestrictedRects> {
    if n < 4 {
        return invalid(format!("restricted rectangles need n >= 4, got {n}"));
    }
    let n = n as i32;
    let h = n / 2;
    Ok(RestrictedRects {
        r1: Rect::new(-n, -h, -h, h),
        r2: Rect::new(-h, h, -n, -h),
        r3: Rect::new(h, n, -h, h),
        r4: Rect::new(-h, h, h, n),
        s2: Rect::new(-n, n, -n, -h),
        s4: Rect::new(-n, n, h, n),
    })
}
