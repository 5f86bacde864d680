//! Prize-per-time greedy construction.
//!
//! Travel times are normalized by the horizon `T`, so elapsed time and
//! deadlines live in `[0, 1]`. Normalized quantities are kept as exact
//! rationals, which makes the feasibility filter agree bit-for-bit with the
//! integer masks of [`crate::mdp`].

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_rational::Ratio;

use crate::instance::{BeopInstance, Solution};
use crate::nodeset::NodeSet;

pub type Norm = Ratio<u64>;

/// Normalized distance, return-cost and deadline tables.
#[derive(Clone, Debug)]
pub struct GreedyContext {
    m: usize,
    /// `D[i][j] = t(i, j) / T`.
    pub d: Vec<Norm>,
    /// `R[i][j] = D[i][j] + D[j][0]`.
    pub r: Vec<Norm>,
    /// `deadline[j] / T`.
    pub tw: Vec<Norm>,
}

impl GreedyContext {
    pub fn new(inst: &BeopInstance) -> Self {
        let m = inst.size();
        let t_max = inst.max_time.max(1);
        let d: Vec<Norm> = inst.travel.iter().map(|&t| Ratio::new(t, t_max)).collect();
        let mut r = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                r.push(d[i * m + j] + d[j * m]);
            }
        }
        let tw = inst.deadline.iter().map(|&f| Ratio::new(f, t_max)).collect();
        GreedyContext { m, d, r, tw }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> Norm {
        self.d[i * self.m + j]
    }

    #[inline]
    pub fn ret(&self, i: usize, j: usize) -> Norm {
        self.r[i * self.m + j]
    }
}

/// Unvisited customers `j` with `L + R[i][j] ≤ 1`, `L + D[i][j] ≤ T_j` and
/// `q + d_j ≤ C`, ascending. The depot is never a candidate.
pub fn possible_moves(
    ctx: &GreedyContext,
    inst: &BeopInstance,
    l: Norm,
    current: usize,
    visited: &NodeSet,
    q: u32,
) -> Vec<usize> {
    let one = Ratio::from_integer(1);
    (1..inst.size())
        .filter(|&j| {
            !visited.contains(j)
                && l + ctx.ret(current, j) <= one
                && l + ctx.dist(current, j) <= ctx.tw[j]
                && q as u64 + inst.demand[j] as u64 <= inst.capacity as u64
        })
        .collect()
}

/// Selection key: zero-distance moves outrank every finite ratio.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Score {
    Finite(Ratio<u64>),
    Free(u32),
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Score::Free(a), Score::Free(b)) => a.cmp(b),
            (Score::Free(_), Score::Finite(_)) => Ordering::Greater,
            (Score::Finite(_), Score::Free(_)) => Ordering::Less,
            (Score::Finite(a), Score::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn score(ctx: &GreedyContext, inst: &BeopInstance, from: usize, j: usize) -> Score {
    let dist = ctx.dist(from, j);
    if *dist.numer() == 0 {
        Score::Free(inst.prize[j])
    } else {
        Score::Finite(Ratio::from_integer(inst.prize[j] as u64) / dist)
    }
}

/// Best move by prize over normalized distance; the lowest id wins ties.
fn best_move(ctx: &GreedyContext, inst: &BeopInstance, from: usize, moves: &[usize]) -> usize {
    let mut best = moves[0];
    let mut best_score = score(ctx, inst, from, best);
    for &j in &moves[1..] {
        let s = score(ctx, inst, from, j);
        if s > best_score {
            best = j;
            best_score = s;
        }
    }
    best
}

/// Builds one route per vehicle, returning to the depot to unload whenever no
/// customer fits and starting over from there until nothing fits at all.
pub fn greedy_solve(inst: &BeopInstance) -> Solution {
    let ctx = GreedyContext::new(inst);
    let zero = Ratio::from_integer(0);
    let mut taken = NodeSet::new(inst.size());
    let mut routes = Vec::with_capacity(inst.num_vehicles as usize);
    for _ in 0..inst.num_vehicles {
        let mut tour = vec![0];
        let mut l = zero;
        let mut q = 0u32;
        let mut moves = possible_moves(&ctx, inst, l, 0, &taken, q);
        while !moves.is_empty() {
            let last = *tour.last().unwrap();
            let next = best_move(&ctx, inst, last, &moves);
            l += ctx.dist(last, next);
            q += inst.demand[next];
            tour.push(next);
            taken.insert(next);
            moves = possible_moves(&ctx, inst, l, next, &taken, q);
            if moves.is_empty() {
                l += ctx.dist(next, 0);
                q = 0;
                tour.push(0);
                moves = possible_moves(&ctx, inst, l, 0, &taken, q);
            }
        }
        if tour.len() == 1 {
            tour.push(0);
        }
        routes.push(tour);
    }
    Solution::from_routes(inst, routes)
}
