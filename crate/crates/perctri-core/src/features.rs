//! Lowest crossing, pioneering sites and pivotal sites of a configuration.
//!
//! A horizontal crossing of `B(n)` is an open path whose first vertex is in the
//! left column, last vertex in the right column, and whose other vertices lie
//! strictly between the two columns.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::config::{Configuration, Grid};
use crate::error::{invariant, Result};
use crate::flow::FlowScratch;
use crate::geometry::{Side, Vertex};
use crate::percolation::{on_side_idx, two_disjoint_arms_idx, State};

const REACH_LEFT: u16 = 1;
const REACH_RIGHT: u16 = 1 << 1;
const CLOSED_BOTTOM: u16 = 1 << 2;
const TOUCH_LEFT: u16 = 1 << 3;
const TOUCH_RIGHT: u16 = 1 << 4;
const ON_CROSSING: u16 = 1 << 5;
const IN_L: u16 = 1 << 6;
const ADJ_S: u16 = 1 << 7;
const ADJ_T: u16 = 1 << 8;

const NIL: u32 = u32::MAX;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSets {
    /// The lowest crossing, left to right; empty when there is no crossing.
    pub gamma: Vec<Vertex>,
    pub l: BTreeSet<Vertex>,
    pub f: BTreeSet<Vertex>,
    /// Highest crossing (the lowest crossing of the half-turned configuration).
    pub h_top: BTreeSet<Vertex>,
    pub q: BTreeSet<Vertex>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureCounts {
    pub l: u64,
    pub f: u64,
    pub q: u64,
}

/// Reusable buffers for repeated feature extraction at a fixed `n`.
#[derive(Debug)]
pub struct FeatureEngine {
    n: u32,
    grid: Grid,
    flags: Vec<u16>,
    flags_rot: Vec<u16>,
    rotated: Configuration,
    queue: Vec<usize>,
    disc: Vec<u32>,
    low: Vec<u32>,
    parent: Vec<u32>,
    blk: Vec<u32>,
    frames: Vec<(u32, u32)>,
    vstack: Vec<u32>,
    visited: Vec<u32>,
    heads: Vec<u32>,
    block_on: Vec<bool>,
    s_adj: Vec<u32>,
    t_adj: Vec<u32>,
}

impl FeatureEngine {
    pub fn new(n: u32) -> Self {
        let grid = Grid::new(n);
        let len = grid.len;
        FeatureEngine {
            n,
            grid,
            flags: vec![0; len],
            flags_rot: vec![0; len],
            rotated: Configuration::all_closed(n),
            queue: Vec::with_capacity(len),
            disc: vec![0; len + 2],
            low: vec![0; len + 2],
            parent: vec![NIL; len + 2],
            blk: vec![NIL; len + 2],
            frames: Vec::new(),
            vstack: Vec::new(),
            visited: Vec::new(),
            heads: Vec::new(),
            block_on: Vec::new(),
            s_adj: Vec::new(),
            t_adj: Vec::new(),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    fn check_n(&self, config: &Configuration) {
        assert_eq!(config.n(), self.n, "engine built for a different box size");
    }

    /// `(|L|, |F|, |Q|)`, checking `Q ⊆ L ⊆ F`.
    pub fn counts(&mut self, config: &Configuration) -> Result<FeatureCounts> {
        self.check_n(config);
        let mut flags = std::mem::take(&mut self.flags);
        let crossing = self.mark_lowest(config, &mut flags)?;
        let mut counts = FeatureCounts::default();
        if crossing {
            let mut rot_flags = std::mem::take(&mut self.flags_rot);
            let mut rotated = std::mem::replace(&mut self.rotated, Configuration::all_closed(1));
            config.rotate_into(&mut rotated);
            let rot_crossing = self.mark_lowest(&rotated, &mut rot_flags);
            self.rotated = rotated;
            let rot_crossing = match rot_crossing {
                Ok(c) => c,
                Err(e) => {
                    self.flags_rot = rot_flags;
                    self.flags = flags;
                    return Err(e);
                }
            };
            if !rot_crossing {
                self.flags_rot = rot_flags;
                self.flags = flags;
                return invariant("half-turned configuration lost its crossing");
            }
            let len = self.grid.len;
            for i in 0..len {
                let fl = flags[i];
                let in_l = fl & IN_L != 0;
                let in_f = config.is_open_idx(i)
                    && fl & (REACH_LEFT | REACH_RIGHT) == (REACH_LEFT | REACH_RIGHT)
                    && self.closed_arm_bottom(&flags, i);
                let in_q = in_l && rot_flags[len - 1 - i] & IN_L != 0;
                if (in_q && !in_l) || (in_l && !in_f) {
                    let v = self.grid.vertex(i);
                    self.flags_rot = rot_flags;
                    self.flags = flags;
                    return invariant(format!("inclusion Q ⊆ L ⊆ F fails at {v}"));
                }
                counts.l += in_l as u64;
                counts.f += in_f as u64;
                counts.q += in_q as u64;
            }
            self.flags_rot = rot_flags;
        }
        self.flags = flags;
        Ok(counts)
    }

    /// Full feature sets including the ordered lowest crossing.
    pub fn sets(&mut self, config: &Configuration) -> Result<FeatureSets> {
        self.check_n(config);
        let mut out = FeatureSets::default();
        let mut flags = std::mem::take(&mut self.flags);
        let res = self.mark_lowest(config, &mut flags);
        self.flags = flags;
        if !res? {
            return Ok(out);
        }
        let g = self.grid;
        for i in 0..g.len {
            let fl = self.flags[i];
            if fl & IN_L != 0 {
                out.l.insert(g.vertex(i));
            }
            if config.is_open_idx(i)
                && fl & (REACH_LEFT | REACH_RIGHT) == (REACH_LEFT | REACH_RIGHT)
                && self.closed_arm_bottom(&self.flags, i)
            {
                out.f.insert(g.vertex(i));
            }
        }
        out.gamma = order_path(&g, &out.l)?;

        let rotated = config.rotated_half_turn();
        let mut rot_flags = std::mem::take(&mut self.flags_rot);
        let res = self.mark_lowest(&rotated, &mut rot_flags);
        self.flags_rot = rot_flags;
        if !res? {
            return invariant("half-turned configuration lost its crossing");
        }
        for i in 0..g.len {
            if self.flags_rot[i] & IN_L != 0 {
                let v = g.vertex(i);
                out.h_top.insert(Vertex::new(-v.x, -v.y));
            }
        }
        out.q = out.l.intersection(&out.h_top).copied().collect();
        if !out.q.is_subset(&out.l) || !out.l.is_subset(&out.f) {
            return invariant("inclusion Q ⊆ L ⊆ F fails");
        }
        Ok(out)
    }

    /// Sites on at least one horizontal crossing.
    pub fn on_crossing(&mut self, config: &Configuration) -> Result<BTreeSet<Vertex>> {
        self.check_n(config);
        let mut flags = std::mem::take(&mut self.flags);
        let res = self.mark_lowest(config, &mut flags);
        self.flags = flags;
        res?;
        Ok((0..self.grid.len)
            .filter(|&i| self.flags[i] & ON_CROSSING != 0)
            .map(|i| self.grid.vertex(i))
            .collect())
    }

    fn closed_arm_bottom(&self, flags: &[u16], i: usize) -> bool {
        let (_, r) = self.grid.col_row(i);
        if r == 0 {
            return true;
        }
        let (nb, k) = self.grid.neighbors(i);
        nb[..k].iter().any(|&j| flags[j] & CLOSED_BOTTOM != 0)
    }

    fn flood(&mut self, config: &Configuration, flags: &mut [u16], bit: u16, open: bool, interior_only: bool) {
        let g = self.grid;
        let last = g.side - 1;
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            let (nb, k) = g.neighbors(u);
            for &j in &nb[..k] {
                if flags[j] & bit != 0 || config.is_open_idx(j) != open {
                    continue;
                }
                if interior_only {
                    let (c, _) = g.col_row(j);
                    if c == 0 || c == last {
                        continue;
                    }
                }
                flags[j] |= bit;
                self.queue.push(j);
            }
        }
        self.queue.clear();
    }

    /// Marks crossing-related flags for `config`; returns whether a crossing exists.
    fn mark_lowest(&mut self, config: &Configuration, flags: &mut [u16]) -> Result<bool> {
        let g = self.grid;
        let side = g.side;
        let last = side - 1;
        flags.iter_mut().for_each(|f| *f = 0);

        self.queue.clear();
        for r in 0..side {
            let i = g.at(0, r);
            if config.is_open_idx(i) {
                flags[i] |= REACH_LEFT;
                self.queue.push(i);
            }
        }
        self.flood(config, flags, REACH_LEFT, true, false);
        if !(0..side).any(|r| flags[g.at(last, r)] & REACH_LEFT != 0) {
            return Ok(false);
        }
        for r in 0..side {
            let i = g.at(last, r);
            if config.is_open_idx(i) {
                flags[i] |= REACH_RIGHT;
                self.queue.push(i);
            }
        }
        self.flood(config, flags, REACH_RIGHT, true, false);

        // Interior columns adjacent to open side-column sites.
        let open_side_nb = |i: usize, col: usize| {
            let (nb, k) = g.neighbors(i);
            nb[..k].iter().any(|&j| g.col_row(j).0 == col && config.is_open_idx(j))
        };
        for r in 0..side {
            let i = g.at(1, r);
            if config.is_open_idx(i) && open_side_nb(i, 0) {
                flags[i] |= ADJ_S | TOUCH_LEFT;
                self.queue.push(i);
            }
        }
        self.flood(config, flags, TOUCH_LEFT, true, true);
        for r in 0..side {
            let i = g.at(last - 1, r);
            if config.is_open_idx(i) && open_side_nb(i, last) {
                flags[i] |= ADJ_T;
                if flags[i] & TOUCH_RIGHT == 0 {
                    flags[i] |= TOUCH_RIGHT;
                    self.queue.push(i);
                }
            }
        }
        self.flood(config, flags, TOUCH_RIGHT, true, true);

        // Side-column sites: an interior neighbour whose component reaches the far side.
        for r in 0..side {
            for (col, need) in [(0, TOUCH_RIGHT), (last, TOUCH_LEFT)] {
                let i = g.at(col, r);
                if !config.is_open_idx(i) {
                    continue;
                }
                let (nb, k) = g.neighbors(i);
                if nb[..k].iter().any(|&j| {
                    let c = g.col_row(j).0;
                    c != 0 && c != last && flags[j] & need != 0
                }) {
                    flags[i] |= ON_CROSSING;
                }
            }
        }
        self.mark_interior_on_crossing(flags)?;

        for c in 0..side {
            let i = g.at(c, 0);
            if !config.is_open_idx(i) {
                flags[i] |= CLOSED_BOTTOM;
                self.queue.push(i);
            }
        }
        self.flood(config, flags, CLOSED_BOTTOM, false, false);

        for i in 0..g.len {
            if flags[i] & ON_CROSSING != 0 && self.closed_arm_bottom(flags, i) {
                flags[i] |= IN_L;
            }
        }
        Ok(true)
    }

    /// Interior sites on a simple path between the virtual terminals `s` (left)
    /// and `t` (right): those in blocks of the block-cut chain from `s` to `t`.
    fn mark_interior_on_crossing(&mut self, flags: &mut [u16]) -> Result<()> {
        let g = self.grid;
        let len = g.len as u32;
        let (s, t) = (len, len + 1);
        let both = TOUCH_LEFT | TOUCH_RIGHT;
        self.s_adj.clear();
        self.t_adj.clear();
        for r in 0..g.side {
            let a = g.at(1, r);
            if flags[a] & ADJ_S != 0 && flags[a] & both == both {
                self.s_adj.push(a as u32);
            }
            let b = g.at(g.side - 2, r);
            if flags[b] & ADJ_T != 0 && flags[b] & both == both {
                self.t_adj.push(b as u32);
            }
        }
        if self.s_adj.is_empty() || self.t_adj.is_empty() {
            return invariant("crossing detected but the terminals are not linked");
        }

        for &v in &self.visited {
            self.disc[v as usize] = 0;
        }
        self.disc[s as usize] = 0;
        self.disc[t as usize] = 0;
        self.visited.clear();
        self.frames.clear();
        self.vstack.clear();
        self.heads.clear();

        let mut time = 1u32;
        self.disc[s as usize] = time;
        self.low[s as usize] = time;
        self.parent[s as usize] = NIL;
        self.frames.push((s, 0));

        while let Some(&(v, pos)) = self.frames.last() {
            let next = self.next_h_neighbor(flags, v, pos);
            match next {
                Some((w, npos)) => {
                    self.frames.last_mut().unwrap().1 = npos;
                    if self.disc[w as usize] == 0 {
                        time += 1;
                        self.disc[w as usize] = time;
                        self.low[w as usize] = time;
                        self.parent[w as usize] = v;
                        self.vstack.push(w);
                        if w < len {
                            self.visited.push(w);
                        }
                        self.frames.push((w, 0));
                    } else if w != self.parent[v as usize] {
                        let dw = self.disc[w as usize];
                        let lv = &mut self.low[v as usize];
                        *lv = (*lv).min(dw);
                    }
                }
                None => {
                    self.frames.pop();
                    if let Some(&(p, _)) = self.frames.last() {
                        let lv = self.low[v as usize];
                        let lp = &mut self.low[p as usize];
                        *lp = (*lp).min(lv);
                        if lv >= self.disc[p as usize] {
                            let b = self.heads.len() as u32;
                            self.heads.push(p);
                            loop {
                                let w = self.vstack.pop().expect("vertex stack underflow");
                                self.blk[w as usize] = b;
                                if w == v {
                                    break;
                                }
                            }
                        }
                    }
                }
            }
        }
        if self.disc[t as usize] == 0 {
            return invariant("crossing detected but t is unreachable from s");
        }
        self.block_on.clear();
        self.block_on.resize(self.heads.len(), false);
        let mut w = t;
        while w != s {
            self.block_on[self.blk[w as usize] as usize] = true;
            w = self.parent[w as usize];
        }
        for &v in &self.visited {
            if self.block_on[self.blk[v as usize] as usize] {
                flags[v as usize] |= ON_CROSSING;
            }
        }
        for (b, &h) in self.heads.iter().enumerate() {
            if self.block_on[b] && h < len {
                flags[h as usize] |= ON_CROSSING;
            }
        }
        Ok(())
    }

    /// Next neighbour of `v` in the augmented interior graph at or after position `pos`.
    fn next_h_neighbor(&self, flags: &[u16], v: u32, mut pos: u32) -> Option<(u32, u32)> {
        let g = self.grid;
        let len = g.len as u32;
        let both = TOUCH_LEFT | TOUCH_RIGHT;
        if v == len {
            return self.s_adj.get(pos as usize).map(|&w| (w, pos + 1));
        }
        if v == len + 1 {
            return self.t_adj.get(pos as usize).map(|&w| (w, pos + 1));
        }
        let (nb, k) = g.neighbors(v as usize);
        while (pos as usize) < k {
            let w = nb[pos as usize];
            pos += 1;
            if flags[w] & both == both {
                return Some((w as u32, pos));
            }
        }
        if pos == k as u32 {
            pos += 1;
            if flags[v as usize] & ADJ_S != 0 {
                return Some((len, pos));
            }
        }
        if pos == k as u32 + 1 {
            pos += 1;
            if flags[v as usize] & ADJ_T != 0 {
                return Some((len + 1, pos));
            }
        }
        None
    }
}

/// Orders `l` into a simple path from its left-column vertex to its right-column
/// vertex, preferring the lowest and then leftmost neighbour at each step.
fn order_path(g: &Grid, l: &BTreeSet<Vertex>) -> Result<Vec<Vertex>> {
    if l.is_empty() {
        return Ok(Vec::new());
    }
    let n = g.n;
    let lefts: Vec<Vertex> = l.iter().copied().filter(|v| v.x == -n).collect();
    let rights: Vec<Vertex> = l.iter().copied().filter(|v| v.x == n).collect();
    if lefts.len() != 1 || rights.len() != 1 {
        return invariant(format!(
            "lowest crossing set has {} left and {} right column sites",
            lefts.len(),
            rights.len()
        ));
    }
    let goal = rights[0];
    let mut path = vec![lefts[0]];
    let mut used: BTreeSet<Vertex> = path.iter().copied().collect();
    let candidates = |v: Vertex, used: &BTreeSet<Vertex>| {
        let mut c: Vec<Vertex> = v.neighbors().into_iter().filter(|u| l.contains(u) && !used.contains(u)).collect();
        c.sort_by_key(|u| (u.y, u.x));
        c
    };
    let mut stack = vec![(candidates(path[0], &used), 0usize)];
    let mut budget = 1_000_000u32;
    while path.len() < l.len() || *path.last().unwrap() != goal {
        budget = budget.saturating_sub(1);
        if budget == 0 {
            return invariant("ordering the lowest crossing exceeded its step budget");
        }
        let (cands, k) = stack.last_mut().unwrap();
        if *k < cands.len() && *path.last().unwrap() != goal {
            let u = cands[*k];
            *k += 1;
            let v = *path.last().unwrap();
            used.insert(u);
            if strands_a_site(l, &used, v, u, goal) || !rest_connected(l, &used, u) {
                used.remove(&u);
                continue;
            }
            path.push(u);
            let c = candidates(u, &used);
            stack.push((c, 0));
        } else {
            stack.pop();
            let v = path.pop().unwrap();
            used.remove(&v);
            if stack.is_empty() {
                return invariant("lowest crossing set is not a simple path");
            }
        }
    }
    Ok(path)
}

/// After stepping `v -> u`, true if some unused neighbour of `v` is left with
/// too few free neighbours to be passed through (or, for `goal`, reached).
fn strands_a_site(l: &BTreeSet<Vertex>, used: &BTreeSet<Vertex>, v: Vertex, u: Vertex, goal: Vertex) -> bool {
    v.neighbors().into_iter().filter(|w| l.contains(w) && !used.contains(w)).any(|w| {
        let free = w.neighbors().into_iter().filter(|z| l.contains(z) && (!used.contains(z) || *z == u)).count();
        free < if w == goal { 1 } else { 2 }
    })
}

/// Every unused site of `l` is reachable from `u` through unused sites.
fn rest_connected(l: &BTreeSet<Vertex>, used: &BTreeSet<Vertex>, u: Vertex) -> bool {
    let remaining = l.len() - used.len();
    let mut seen: BTreeSet<Vertex> = BTreeSet::new();
    let mut stack = vec![u];
    while let Some(v) = stack.pop() {
        for w in v.neighbors() {
            if l.contains(&w) && !used.contains(&w) && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len() == remaining
}

/// Sites lying on at least one horizontal open crossing of `B(n)`.
pub fn on_some_crossing_set(config: &Configuration) -> Result<BTreeSet<Vertex>> {
    FeatureEngine::new(config.n()).on_crossing(config)
}

/// The lowest crossing as an ordered path (empty if none).
pub fn lowest_crossing(config: &Configuration) -> Result<Vec<Vertex>> {
    Ok(FeatureEngine::new(config.n()).sets(config)?.gamma)
}

pub fn pioneering_set(config: &Configuration) -> Result<BTreeSet<Vertex>> {
    Ok(FeatureEngine::new(config.n()).sets(config)?.f)
}

/// Pivotal sites as the intersection of the lowest and highest crossings.
pub fn pivotal_set(config: &Configuration) -> Result<BTreeSet<Vertex>> {
    Ok(FeatureEngine::new(config.n()).sets(config)?.q)
}

pub fn feature_sets(config: &Configuration) -> Result<FeatureSets> {
    FeatureEngine::new(config.n()).sets(config)
}

/// `(|L|, |F|, |Q|)`.
pub fn feature_counts(config: &Configuration) -> Result<(usize, usize, usize)> {
    let c = FeatureEngine::new(config.n()).counts(config)?;
    Ok((c.l as usize, c.f as usize, c.q as usize))
}

/// Whether an open left-right path (any route) exists in `B(n)`.
pub fn has_open_crossing(config: &Configuration) -> bool {
    let g = Grid::new(config.n());
    let mut seen = vec![false; g.len];
    let mut queue = VecDeque::new();
    for r in 0..g.side {
        let i = g.at(0, r);
        if config.is_open_idx(i) {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(u) = queue.pop_front() {
        if g.col_row(u).0 == g.side - 1 {
            return true;
        }
        g.for_each_neighbor(u, |j| {
            if !seen[j] && config.is_open_idx(j) {
                seen[j] = true;
                queue.push_back(j);
            }
        });
    }
    false
}

/// Open sites whose closure destroys every horizontal open crossing.
pub fn pivotal_flip_oracle(config: &Configuration) -> BTreeSet<Vertex> {
    let mut out = BTreeSet::new();
    if !has_open_crossing(config) {
        return out;
    }
    let mut c = config.clone();
    for i in 0..config.len() {
        if config.is_open_idx(i) {
            c.set_idx(i, false);
            if !has_open_crossing(&c) {
                out.insert(config.vertex(i));
            }
            c.set_idx(i, true);
        }
    }
    out
}

/// Pivotal sites from the arm description: open, on a crossing, with two
/// disjoint closed arms to the top and the bottom.
pub fn pivotal_set_direct(config: &Configuration) -> Result<BTreeSet<Vertex>> {
    let on = on_some_crossing_set(config)?;
    let g = Grid::new(config.n());
    let mut scratch = FlowScratch::new();
    let mut out = BTreeSet::new();
    for v in on {
        let x = g.index(v).unwrap();
        let top = |i: usize| on_side_idx(&g, i, Side::Top);
        let bottom = |i: usize| on_side_idx(&g, i, Side::Bottom);
        if two_disjoint_arms_idx(config, &g, x, State::Closed, top, bottom, |_| true, &mut scratch) {
            out.insert(v);
        }
    }
    Ok(out)
}

/// Checks that no open horizontal crossing lies in the part of `B(n)` below
/// `gamma` (the component of the bottom row in the complement of `gamma`).
pub fn below_gamma_has_no_crossing(config: &Configuration, gamma: &[Vertex]) -> bool {
    let g = Grid::new(config.n());
    let on_gamma: BTreeSet<usize> = gamma.iter().map(|v| g.index(*v).unwrap()).collect();
    let mut below = vec![false; g.len];
    let mut queue = VecDeque::new();
    for c in 0..g.side {
        let i = g.at(c, 0);
        if !on_gamma.contains(&i) {
            below[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(u) = queue.pop_front() {
        g.for_each_neighbor(u, |j| {
            if !below[j] && !on_gamma.contains(&j) {
                below[j] = true;
                queue.push_back(j);
            }
        });
    }
    let mut restricted = config.clone();
    for i in 0..g.len {
        if !below[i] {
            restricted.set_idx(i, false);
        }
    }
    !has_open_crossing(&restricted)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terminal {
    Right,
    Top,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeStep {
    pub site: Vertex,
    pub open: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationTrace {
    pub steps: Vec<ProbeStep>,
    pub terminal: Terminal,
    pub discovered_open: BTreeSet<Vertex>,
}

/// Walks the interface between open sites joined to a virtual open column left
/// of `B(n)` and closed sites joined to a virtual closed row below it.
pub fn explore_interface(config: &Configuration) -> Result<ExplorationTrace> {
    let n = config.n() as i32;
    let state = |v: Vertex| -> Option<bool> {
        if v.x == -n - 1 && v.y >= -n {
            Some(true)
        } else if v.y == -n - 1 && v.x >= -n {
            Some(false)
        } else if config.contains(v) {
            Some(config.is_open(v))
        } else {
            None
        }
    };
    let mut o = Vertex::new(-n - 1, -n);
    let mut c = Vertex::new(-n, -n - 1);
    let mut steps = Vec::new();
    let mut discovered = BTreeSet::new();
    let limit = 12 * config.len();
    loop {
        if steps.len() > limit {
            return invariant("exploration exceeded its step limit");
        }
        let d = c - o;
        let apex = o
            .neighbors()
            .into_iter()
            .find(|w| w.is_adjacent(c) && {
                let e = *w - o;
                d.x as i64 * e.y as i64 - d.y as i64 * e.x as i64 > 0
            })
            .expect("adjacent sites share two common neighbours");
        let Some(open) = state(apex) else {
            return invariant(format!("exploration left the box at {apex}"));
        };
        let real = config.contains(apex);
        if real {
            steps.push(ProbeStep { site: apex, open });
        }
        if open {
            if real {
                discovered.insert(apex);
            }
            if apex.x == n {
                return Ok(ExplorationTrace { steps, terminal: Terminal::Right, discovered_open: discovered });
            }
            o = apex;
        } else {
            if apex.y == n {
                return Ok(ExplorationTrace { steps, terminal: Terminal::Top, discovered_open: discovered });
            }
            c = apex;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(pts: &[(i32, i32)]) -> BTreeSet<Vertex> {
        pts.iter().map(|&(x, y)| Vertex::new(x, y)).collect()
    }

    #[test]
    fn all_open_box() {
        let c = Configuration::all_open(2);
        let fs = feature_sets(&c).unwrap();
        let bottom: Vec<Vertex> = (-2..=2).map(|x| Vertex::new(x, -2)).collect();
        assert_eq!(fs.gamma, bottom);
        assert_eq!(fs.f, bottom.iter().copied().collect());
        assert!(fs.q.is_empty());
        assert_eq!(feature_counts(&c).unwrap(), (5, 5, 0));
        assert_eq!(on_some_crossing_set(&c).unwrap().len(), 25);
    }

    #[test]
    fn all_closed_box() {
        let c = Configuration::all_closed(3);
        assert_eq!(feature_counts(&c).unwrap(), (0, 0, 0));
        assert!(on_some_crossing_set(&c).unwrap().is_empty());
        assert_eq!(explore_interface(&c).unwrap().terminal, Terminal::Top);
    }

    #[test]
    fn middle_row() {
        let c = Configuration::from_fn(1, |v| v.y == 0);
        let fs = feature_sets(&c).unwrap();
        let row = vs(&[(-1, 0), (0, 0), (1, 0)]);
        assert_eq!(fs.l, row);
        assert_eq!(fs.q, row);
        assert_eq!(pivotal_flip_oracle(&c), row);
        assert_eq!(pivotal_set_direct(&c).unwrap(), row);
    }

    #[test]
    fn exploration_hugs_bottom_when_open() {
        let c = Configuration::all_open(3);
        let t = explore_interface(&c).unwrap();
        assert_eq!(t.terminal, Terminal::Right);
        assert!(t.steps.iter().all(|s| s.site.y == -3));
    }

    #[test]
    fn engine_reuse_matches_fresh() {
        let mut e = FeatureEngine::new(6);
        for t in 0..50 {
            let c = Configuration::sample(6, 11, t);
            let fresh = feature_counts(&c).unwrap();
            let c2 = e.counts(&c).unwrap();
            assert_eq!((c2.l as usize, c2.f as usize, c2.q as usize), fresh);
        }
    }

    #[test]
    fn gamma_ordering_handles_triangle_chords() {
        // These once sent the path search into exponential backtracking.
        for t in [58, 213, 279, 9986] {
            let c = Configuration::sample(16, 202, t);
            let fs = feature_sets(&c).unwrap();
            assert_eq!(fs.gamma.len(), fs.l.len());
            assert!(fs.gamma.windows(2).all(|w| w[0].is_adjacent(w[1])));
        }
    }
}
