//! Brute-force oracles used by the integration tests. They work on vertex
//! sets and plain searches, sharing nothing with the library's algorithms.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use perctri_core::{Configuration, Vertex};

pub fn vertices(c: &Configuration) -> Vec<Vertex> {
    (0..c.len()).map(|i| c.vertex(i)).collect()
}

pub fn open_set(c: &Configuration) -> BTreeSet<Vertex> {
    vertices(c).into_iter().filter(|v| c.is_open(*v)).collect()
}

/// Vertices of `allowed` reachable from `start` (which need not be allowed).
pub fn reach(c: &Configuration, start: &[Vertex], allowed: impl Fn(Vertex) -> bool) -> BTreeSet<Vertex> {
    let mut seen: BTreeSet<Vertex> = BTreeSet::new();
    let mut q: VecDeque<Vertex> = VecDeque::new();
    for &s in start {
        if seen.insert(s) {
            q.push_back(s);
        }
    }
    while let Some(v) = q.pop_front() {
        for w in v.neighbors() {
            if c.contains(w) && allowed(w) && seen.insert(w) {
                q.push_back(w);
            }
        }
    }
    seen
}

fn column(c: &Configuration, x: i32) -> Vec<Vertex> {
    let n = c.n() as i32;
    (-n..=n).map(|y| Vertex::new(x, y)).collect()
}

fn row(c: &Configuration, y: i32) -> Vec<Vertex> {
    let n = c.n() as i32;
    (-n..=n).map(|x| Vertex::new(x, y)).collect()
}

/// Open left-right crossing, every vertex open.
pub fn open_lr(c: &Configuration) -> bool {
    let n = c.n() as i32;
    let start: Vec<Vertex> = column(c, -n).into_iter().filter(|v| c.is_open(*v)).collect();
    reach(c, &start, |w| c.is_open(w)).iter().any(|v| v.x == n && c.is_open(*v))
}

/// Closed top-bottom crossing, every vertex closed.
pub fn closed_tb(c: &Configuration) -> bool {
    let n = c.n() as i32;
    let start: Vec<Vertex> = row(c, -n).into_iter().filter(|v| !c.is_open(*v)).collect();
    reach(c, &start, |w| !c.is_open(w)).iter().any(|v| v.y == n && !c.is_open(*v))
}

/// `x` on the bottom row, or a closed chain from a neighbour of `x` to the bottom row.
pub fn closed_arm_bottom(c: &Configuration, x: Vertex) -> bool {
    let n = c.n() as i32;
    if x.y == -n {
        return true;
    }
    let start: Vec<Vertex> = x.neighbors().into_iter().filter(|w| c.contains(*w) && !c.is_open(*w)).collect();
    reach(c, &start, |w| !c.is_open(w)).iter().any(|v| v.y == -n && !c.is_open(*v))
}

/// Every simple open crossing that starts in the left column, ends in the
/// right column and has no other vertex in either side column.
pub fn simple_crossings(c: &Configuration) -> Vec<Vec<Vertex>> {
    let n = c.n() as i32;
    let mut out = Vec::new();
    fn dfs(c: &Configuration, n: i32, path: &mut Vec<Vertex>, out: &mut Vec<Vec<Vertex>>) {
        let v = *path.last().unwrap();
        for w in v.neighbors() {
            if !c.contains(w) || !c.is_open(w) || path.contains(&w) || w.x == -n {
                continue;
            }
            path.push(w);
            if w.x == n {
                out.push(path.clone());
            } else {
                dfs(c, n, path, out);
            }
            path.pop();
        }
    }
    for s in column(c, -n) {
        if c.is_open(s) {
            let mut path = vec![s];
            dfs(c, n, &mut path, &mut out);
        }
    }
    out
}

pub fn crossing_union(c: &Configuration) -> BTreeSet<Vertex> {
    simple_crossings(c).into_iter().flatten().collect()
}

/// Vertices off `path` that the bottom row reaches without touching `path`.
pub fn below(c: &Configuration, path: &BTreeSet<Vertex>) -> BTreeSet<Vertex> {
    let n = c.n() as i32;
    let start: Vec<Vertex> = row(c, -n).into_iter().filter(|v| !path.contains(v)).collect();
    reach(c, &start, |w| !path.contains(&w))
}

/// Vertex sets of the crossings whose region beneath lies inside the region
/// beneath every other crossing, keeping only those without upward detours
/// (contained in every other such crossing).
pub fn lowest_crossing_sets(c: &Configuration) -> Vec<BTreeSet<Vertex>> {
    let sets: Vec<BTreeSet<Vertex>> = simple_crossings(c).into_iter().map(|p| p.into_iter().collect()).collect();
    let belows: Vec<BTreeSet<Vertex>> = sets.iter().map(|s| below(c, s)).collect();
    let low: Vec<&BTreeSet<Vertex>> = sets
        .iter()
        .zip(&belows)
        .filter(|(_, bs)| belows.iter().all(|b| bs.is_subset(b)))
        .map(|(s, _)| s)
        .collect();
    let mut out: Vec<BTreeSet<Vertex>> = Vec::new();
    for s in &low {
        if low.iter().all(|o| s.is_subset(o)) && !out.contains(*s) {
            out.push((*s).clone());
        }
    }
    out
}

/// Open sites with open paths to both side columns and a closed arm to the bottom.
pub fn pioneering(c: &Configuration) -> BTreeSet<Vertex> {
    let n = c.n() as i32;
    open_set(c)
        .into_iter()
        .filter(|&x| {
            let r = reach(c, &[x], |w| c.is_open(w));
            r.iter().any(|v| v.x == -n) && r.iter().any(|v| v.x == n) && closed_arm_bottom(c, x)
        })
        .collect()
}

/// Open sites whose closing destroys every open left-right crossing.
pub fn pivotal_by_flip(c: &Configuration) -> BTreeSet<Vertex> {
    if !open_lr(c) {
        return BTreeSet::new();
    }
    open_set(c).into_iter().filter(|&x| !open_lr(&c.flipped(x))).collect()
}

/// Two paths from `x` sharing only `x`, ending in `a` and in `b`; every vertex
/// but `x` in `region` with the given openness. Exhaustive over simple paths to `a`.
pub fn two_arms_brute(
    c: &Configuration,
    x: Vertex,
    open: bool,
    a: &BTreeSet<Vertex>,
    b: &BTreeSet<Vertex>,
    region: &BTreeSet<Vertex>,
) -> bool {
    let ok = |w: Vertex| region.contains(&w) && c.is_open(w) == open;
    let reaches_b = |path: &[Vertex]| {
        if b.contains(&x) && !path[1..].is_empty() {
            return true;
        }
        let blocked: BTreeSet<Vertex> = path[1..].iter().copied().collect();
        let r = reach(c, &[x], |w| ok(w) && !blocked.contains(&w));
        r.iter().any(|v| *v != x && b.contains(v))
    };
    // Trivial arm to `a` when `x` itself is a target.
    if a.contains(&x) {
        let r = reach(c, &[x], ok);
        if r.iter().any(|v| *v != x && b.contains(v)) {
            return true;
        }
    }
    let mut path = vec![x];
    fn dfs(
        c: &Configuration,
        path: &mut Vec<Vertex>,
        ok: &dyn Fn(Vertex) -> bool,
        a: &BTreeSet<Vertex>,
        done: &dyn Fn(&[Vertex]) -> bool,
    ) -> bool {
        let v = *path.last().unwrap();
        for w in v.neighbors() {
            if !c.contains(w) || !ok(w) || path.contains(&w) {
                continue;
            }
            path.push(w);
            if (a.contains(&w) && done(path)) || dfs(c, path, ok, a, done) {
                return true;
            }
            path.pop();
        }
        false
    }
    dfs(c, &mut path, &ok, a, &reaches_b)
}

pub fn side_set(c: &Configuration, side: &str) -> BTreeSet<Vertex> {
    let n = c.n() as i32;
    match side {
        "left" => column(c, -n),
        "right" => column(c, n),
        "bottom" => row(c, -n),
        _ => row(c, n),
    }
    .into_iter()
    .collect()
}

pub fn all_vertices(c: &Configuration) -> BTreeSet<Vertex> {
    vertices(c).into_iter().collect()
}
