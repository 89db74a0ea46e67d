//! Vertex-disjoint paths on the lattice as a unit-vertex-capacity max flow.
//!
//! Each site is split into an in-node and an out-node joined by a capacity-one
//! edge. Targets feed up to two aggregator nodes (groups), each with its own
//! capacity toward the sink. The residual graph is never materialised: flow is
//! stored as predecessor/successor links per site and explored on demand.

use crate::config::{Grid, Marks};

const NONE: u32 = u32::MAX;
const SRC: u32 = u32::MAX - 1;
const AGG_BASE: u32 = u32::MAX - 4;

/// How a site may be used by a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Role {
    Blocked,
    Interior,
    /// May end a path (bit 0: group A, bit 1: group B) and may also be passed through.
    Target(u8),
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Source<'a> {
    /// One site with unbounded capacity; paths share only this site.
    Single(usize),
    /// A set of sites, each starting at most one path.
    Ring(&'a [usize]),
}

/// Reusable buffers for [`max_disjoint_paths`].
#[derive(Debug, Default)]
pub(crate) struct FlowScratch {
    prev: Vec<u32>,
    prev_valid: Marks,
    next: Vec<u32>,
    next_valid: Marks,
    seen: Marks,
    parent: Vec<u32>,
    queue: Vec<u32>,
    path: Vec<u32>,
    feeders: [Vec<u32>; 2],
}

impl FlowScratch {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, len: usize) {
        if self.prev.len() < len {
            self.prev.resize(len, NONE);
            self.next.resize(len, NONE);
            self.parent.resize(2 * len + 4, NONE);
        }
        self.prev_valid.ensure_len(len);
        self.next_valid.ensure_len(len);
        self.seen.ensure_len(2 * len + 4);
        self.prev_valid.clear();
        self.next_valid.clear();
        self.feeders[0].clear();
        self.feeders[1].clear();
    }

    #[inline]
    fn prev(&self, i: usize) -> u32 {
        if self.prev_valid.get(i) {
            self.prev[i]
        } else {
            NONE
        }
    }

    #[inline]
    fn set_prev(&mut self, i: usize, v: u32) {
        self.prev_valid.set(i);
        self.prev[i] = v;
    }

    #[inline]
    fn next(&self, i: usize) -> u32 {
        if self.next_valid.get(i) {
            self.next[i]
        } else {
            NONE
        }
    }

    #[inline]
    fn set_next(&mut self, i: usize, v: u32) {
        self.next_valid.set(i);
        self.next[i] = v;
    }
}

/// Maximum number (capped at `limit`) of paths from `source` to targets that are
/// vertex-disjoint apart from a `Single` source. Group `g` accepts at most
/// `caps[g]` path ends.
pub(crate) fn max_disjoint_paths<R: Fn(usize) -> Role>(
    grid: &Grid,
    role: R,
    source: Source<'_>,
    caps: [u32; 2],
    limit: u32,
    s: &mut FlowScratch,
) -> u32 {
    s.prepare(grid.len);
    let mut flow = 0;
    while flow < limit && augment(grid, &role, source, caps, s) {
        flow += 1;
    }
    flow
}

fn augment<R: Fn(usize) -> Role>(grid: &Grid, role: &R, source: Source<'_>, caps: [u32; 2], s: &mut FlowScratch) -> bool {
    let len = grid.len as u32;
    let agg = |g: u32| 2 * len + g;
    let sink = 2 * len + 2;
    let sup = 2 * len + 3;
    let single = match source {
        Source::Single(x) => Some(x),
        Source::Ring(_) => None,
    };

    s.seen.clear();
    s.queue.clear();
    s.seen.set(sup as usize);
    s.queue.push(sup);
    let mut head = 0;
    let mut found = false;

    macro_rules! visit {
        ($state:expr, $from:expr) => {{
            let st: u32 = $state;
            if s.seen.insert(st as usize) {
                s.parent[st as usize] = $from;
                s.queue.push(st);
            }
        }};
    }

    'bfs: while head < s.queue.len() {
        let u = s.queue[head];
        head += 1;
        if u == sup {
            match source {
                Source::Single(x) => visit!(2 * x as u32 + 1, u),
                Source::Ring(ring) => {
                    for &r in ring {
                        if s.prev(r) == NONE {
                            visit!(2 * r as u32, u);
                        }
                    }
                }
            }
        } else if u >= 2 * len {
            let g = (u - 2 * len) as usize;
            if (s.feeders[g].len() as u32) < caps[g] {
                s.parent[sink as usize] = u;
                found = true;
                break 'bfs;
            }
            for k in 0..s.feeders[g].len() {
                let t = s.feeders[g][k];
                visit!(2 * t + 1, u);
            }
        } else if u % 2 == 0 {
            let i = (u / 2) as usize;
            let p = s.prev(i);
            if p == NONE {
                visit!(u + 1, u);
            } else if p != SRC {
                visit!(2 * p + 1, u);
            }
        } else {
            let i = (u / 2) as usize;
            if Some(i) != single && s.prev(i) != NONE {
                visit!(u - 1, u);
            }
            if let Role::Target(mask) = role(i) {
                for g in 0..2u32 {
                    if mask & (1 << g) != 0 && s.next(i) != AGG_BASE - g {
                        visit!(agg(g), u);
                    }
                }
            }
            let (nb, k) = grid.neighbors(i);
            for &j in &nb[..k] {
                if role(j) != Role::Blocked && s.prev(j) != i as u32 {
                    visit!(2 * j as u32, u);
                }
            }
        }
    }
    if !found {
        return false;
    }

    s.path.clear();
    let mut cur = sink;
    while cur != sup {
        s.path.push(cur);
        cur = s.parent[cur as usize];
    }
    s.path.push(sup);
    s.path.reverse();

    for k in 0..s.path.len() - 1 {
        let a = s.path[k];
        let b = s.path[k + 1];
        if a == sup {
            if single.is_none() {
                s.set_prev((b / 2) as usize, SRC);
            }
        } else if b == sink {
        } else if a >= 2 * len {
            // Aggregator handing its slot back to a previous feeder.
            let g = (a - 2 * len) as usize;
            let t = b / 2;
            s.feeders[g].retain(|&f| f != t);
            s.set_next(t as usize, NONE);
        } else if b >= 2 * len {
            let g = b - 2 * len;
            s.set_next((a / 2) as usize, AGG_BASE - g);
            s.feeders[g as usize].push(a / 2);
        } else if a / 2 == b / 2 {
            // Internal edge, forward or reverse; bookkeeping happens on lattice edges.
        } else if a % 2 == 1 {
            let i = (a / 2) as usize;
            let j = (b / 2) as usize;
            s.set_prev(j, i as u32);
            if Some(i) != single {
                s.set_next(i, j as u32);
            }
        } else {
            // Reverse of the flow edge p -> j.
            let j = (a / 2) as usize;
            let p = (b / 2) as usize;
            if Some(p) != single {
                s.set_next(p, NONE);
            }
            let entered_by_reverse_internal = k > 0 && s.path[k - 1] == a + 1;
            if entered_by_reverse_internal {
                s.set_prev(j, NONE);
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(n: u32, open: &[(i32, i32)], src: (i32, i32), targets_a: &[(i32, i32)], targets_b: &[(i32, i32)], caps: [u32; 2]) -> u32 {
        use crate::geometry::Vertex;
        let g = Grid::new(n);
        let idx = |p: (i32, i32)| g.index(Vertex::new(p.0, p.1)).unwrap();
        let x = idx(src);
        let open_set: Vec<usize> = open.iter().map(|&p| idx(p)).collect();
        let ta: Vec<usize> = targets_a.iter().map(|&p| idx(p)).collect();
        let tb: Vec<usize> = targets_b.iter().map(|&p| idx(p)).collect();
        let role = |i: usize| {
            if i == x {
                return Role::Blocked;
            }
            let mut mask = 0;
            if ta.contains(&i) {
                mask |= 1;
            }
            if tb.contains(&i) {
                mask |= 2;
            }
            if mask != 0 {
                Role::Target(mask)
            } else if open_set.contains(&i) {
                Role::Interior
            } else {
                Role::Blocked
            }
        };
        let mut s = FlowScratch::new();
        max_disjoint_paths(&g, role, Source::Single(x), caps, 4, &mut s)
    }

    #[test]
    fn straight_corridors() {
        // Two arms from the origin along the middle row.
        let open = [(-1, 0), (1, 0)];
        let f = run(2, &open, (0, 0), &[(-2, 0)], &[(2, 0)], [1, 1]);
        assert_eq!(f, 2);
        // Both ends in one group of capacity one.
        let f = run(2, &open, (0, 0), &[(-2, 0), (2, 0)], &[], [1, 0]);
        assert_eq!(f, 1);
    }

    #[test]
    fn shared_cut_vertex_limits_flow() {
        // Everything funnels through (1,0).
        let open = [(1, 0), (2, 1), (2, -1)];
        let f = run(3, &open, (0, 0), &[(3, 1)], &[(3, -1)], [1, 1]);
        assert_eq!(f, 1);
    }

    #[test]
    fn rerouting_needed() {
        // A greedy first path can block the second; augmenting must undo it.
        let n = 3;
        let open: Vec<(i32, i32)> = (-3..=3).flat_map(|x| (-3..=3).map(move |y| (x, y))).collect();
        let left: Vec<(i32, i32)> = (-3..=3).map(|y| (-3, y)).collect();
        let right: Vec<(i32, i32)> = (-3..=3).map(|y| (3, y)).collect();
        assert_eq!(run(n, &open, (0, 0), &left, &right, [u32::MAX, u32::MAX]), 4);
        assert_eq!(run(n, &open, (0, 0), &left, &right, [1, 1]), 2);
    }
}
