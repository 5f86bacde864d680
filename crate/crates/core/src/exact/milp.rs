//! Mixed-integer formulation with per-vehicle subtours, written in LP format.
//!
//! Every vehicle `k` owns an ordered sequence of subtours `k1, k2, ...`; each
//! subtour is a depot-rooted cycle with its own binary arc (`x`) and visit
//! (`y`) variables and continuous order (`u`) variables. Deadlines add
//! continuous arrival-time variables (`s`) whose subtour start times chain
//! along the vehicle's sequence.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::instance::{BeopInstance, Solution};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum MilpError {
    #[error("vehicle {vehicle} uses {used} subtours but the model allows {cap}")]
    TooManySubtours { vehicle: usize, used: usize, cap: usize },
    #[error("the subtour cap must be at least 1")]
    InvalidSubtourCap,
    #[error("solution has {tours} tours for {vehicles} vehicles")]
    FleetMismatch { tours: usize, vehicles: usize },
    #[error("tour of vehicle {0} does not start and end at the depot")]
    MalformedTour(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MilpVar {
    pub name: String,
    pub binary: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MilpRow {
    pub name: String,
    /// Number of the constraint family, 2 to 14.
    pub family: u8,
    pub terms: Vec<(usize, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MilpModel {
    pub n: usize,
    pub vehicles: usize,
    pub subtours: usize,
    pub time_windows: bool,
    pub big_m: i64,
    /// Sorted by name.
    pub vars: Vec<MilpVar>,
    pub objective: Vec<(usize, i64)>,
    pub rows: Vec<MilpRow>,
    index: BTreeMap<String, usize>,
}

fn tag(k: usize, s: usize) -> String {
    format!("k{}s{}", k + 1, s + 1)
}

fn x_name(i: usize, j: usize, k: usize, s: usize) -> String {
    format!("x_{i}_{j}_{}", tag(k, s))
}

fn y_name(i: usize, k: usize, s: usize) -> String {
    format!("y_{i}_{}", tag(k, s))
}

fn u_name(i: usize, k: usize, s: usize) -> String {
    format!("u_{i}_{}", tag(k, s))
}

fn s_name(i: usize, k: usize, s: usize) -> String {
    format!("s_{i}_{}", tag(k, s))
}

impl MilpModel {
    /// Builds the model with `subtours` subtours per vehicle and the big-M
    /// constant `10 T`. The time-window families are left out when every
    /// deadline equals the horizon.
    pub fn build(inst: &BeopInstance, subtours: usize) -> Result<Self, MilpError> {
        if subtours == 0 {
            return Err(MilpError::InvalidSubtourCap);
        }
        let m = inst.size();
        let kk = inst.num_vehicles as usize;
        let tw = inst.has_time_windows();
        let big_m = 10 * inst.max_time as i64;
        let pairs: Vec<(usize, usize)> = (0..kk).flat_map(|k| (0..subtours).map(move |s| (k, s))).collect();

        let mut vars = Vec::new();
        for &(k, s) in &pairs {
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        vars.push(MilpVar { name: x_name(i, j, k, s), binary: true });
                    }
                }
                if i > 0 {
                    vars.push(MilpVar { name: y_name(i, k, s), binary: true });
                }
                vars.push(MilpVar { name: u_name(i, k, s), binary: false });
                if tw {
                    vars.push(MilpVar { name: s_name(i, k, s), binary: false });
                }
            }
        }
        vars.sort_by(|a, b| a.name.cmp(&b.name));
        let index: BTreeMap<String, usize> = vars.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
        let x = |i, j, k, s| index[&x_name(i, j, k, s)];
        let y = |i, k, s| index[&y_name(i, k, s)];
        let u = |i, k, s| index[&u_name(i, k, s)];
        let sv = |i, k, s| index[&s_name(i, k, s)];
        let t = |i: usize, j: usize| inst.t(i, j) as i64;

        let mut objective: Vec<(usize, i64)> = pairs
            .iter()
            .flat_map(|&(k, s)| (1..m).map(move |i| (k, s, i)))
            .map(|(k, s, i)| (y(i, k, s), inst.prize[i] as i64))
            .collect();
        objective.sort_by_key(|&(v, _)| v);

        let mut rows = Vec::new();
        let mut row = |name: String, family: u8, terms: Vec<(usize, i64)>, sense: Sense, rhs: i64| {
            rows.push(MilpRow { name, family, terms, sense, rhs });
        };
        let arcs_of = |k: usize, s: usize| {
            let mut terms = Vec::new();
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        terms.push((x(i, j, k, s), t(i, j)));
                    }
                }
            }
            terms
        };

        for &(k, s) in &pairs {
            let tg = tag(k, s);
            row(
                format!("cap_{tg}"),
                2,
                (1..m).map(|i| (y(i, k, s), inst.demand[i] as i64)).collect(),
                Sense::Le,
                inst.capacity as i64,
            );
        }
        for k in 0..kk {
            let terms = (0..subtours).flat_map(|s| arcs_of(k, s)).collect();
            row(format!("time_k{}", k + 1), 3, terms, Sense::Le, inst.max_time as i64);
        }
        for &(k, s) in &pairs {
            let tg = tag(k, s);
            for l in 0..m {
                let mut terms: Vec<(usize, i64)> = (0..m).filter(|&i| i != l).map(|i| (x(i, l, k, s), 1)).collect();
                terms.extend((0..m).filter(|&j| j != l).map(|j| (x(l, j, k, s), -1)));
                row(format!("flow_{l}_{tg}"), 4, terms, Sense::Eq, 0);
            }
        }
        for &(k, s) in &pairs {
            let terms = (1..m).map(|i| (x(0, i, k, s), 1)).collect();
            row(format!("depart_{}", tag(k, s)), 5, terms, Sense::Le, 1);
        }
        for &(k, s) in &pairs {
            let tg = tag(k, s);
            for j in 1..m {
                let mut terms: Vec<(usize, i64)> = (0..m).filter(|&i| i != j).map(|i| (x(i, j, k, s), 1)).collect();
                terms.push((y(j, k, s), -1));
                row(format!("link_{j}_{tg}"), 6, terms, Sense::Eq, 0);
            }
        }
        for j in 1..m {
            let terms = pairs.iter().map(|&(k, s)| (y(j, k, s), 1)).collect();
            row(format!("once_{j}"), 7, terms, Sense::Le, 1);
        }
        let big_v = m as i64;
        for &(k, s) in &pairs {
            let tg = tag(k, s);
            for i in 0..m {
                for j in 1..m {
                    if i != j {
                        // u_j - u_i - |V| x_ij >= 1 - |V|
                        let terms = vec![(u(j, k, s), 1), (u(i, k, s), -1), (x(i, j, k, s), -big_v)];
                        row(format!("mtz_{i}_{j}_{tg}"), 8, terms, Sense::Ge, 1 - big_v);
                    }
                }
            }
        }
        for &(k, s) in &pairs {
            let tg = tag(k, s);
            for i in 1..m {
                let mut terms = vec![(u(i, k, s), 1)];
                terms.extend((1..m).map(|j| (y(j, k, s), -1)));
                row(format!("order_{i}_{tg}"), 9, terms, Sense::Le, 0);
            }
        }
        for &(k, s) in &pairs {
            row(format!("u0_{}", tag(k, s)), 10, vec![(u(0, k, s), 1)], Sense::Eq, 0);
        }
        if tw {
            for &(k, s) in &pairs {
                let tg = tag(k, s);
                for i in 0..m {
                    row(format!("tw_{i}_{tg}"), 11, vec![(sv(i, k, s), 1)], Sense::Le, inst.deadline[i] as i64);
                }
            }
            for &(k, s) in &pairs {
                let tg = tag(k, s);
                for i in 0..m {
                    for j in 1..m {
                        if i != j {
                            // s_j - s_i - M x_ij >= t_ij - M
                            let terms = vec![(sv(j, k, s), 1), (sv(i, k, s), -1), (x(i, j, k, s), -big_m)];
                            row(format!("arr_{i}_{j}_{tg}"), 12, terms, Sense::Ge, t(i, j) - big_m);
                        }
                    }
                }
            }
            for k in 0..kk {
                row(format!("start_k{}", k + 1), 13, vec![(sv(0, k, 0), 1)], Sense::Eq, 0);
            }
            for k in 0..kk {
                for s in 1..subtours {
                    let mut terms = vec![(sv(0, k, s), 1)];
                    for prev in 0..s {
                        terms.extend(arcs_of(k, prev).into_iter().map(|(v, c)| (v, -c)));
                    }
                    row(format!("chain_{}", tag(k, s)), 14, terms, Sense::Eq, 0);
                }
            }
        }
        Ok(MilpModel {
            n: inst.n,
            vehicles: kk,
            subtours,
            time_windows: tw,
            big_m,
            vars,
            objective,
            rows,
            index,
        })
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Number of variables whose name starts with `prefix` (`"x_"`, `"y_"`, ...).
    pub fn count_vars(&self, prefix: &str) -> usize {
        self.vars.iter().filter(|v| v.name.starts_with(prefix)).count()
    }

    /// Row counts per constraint family, indexed by family number.
    pub fn family_counts(&self) -> [usize; 15] {
        let mut out = [0; 15];
        for r in &self.rows {
            out[r.family as usize] += 1;
        }
        out
    }

    pub fn objective_value(&self, assignment: &[i64]) -> i64 {
        self.objective.iter().map(|&(v, c)| c * assignment[v]).sum()
    }

    /// Rows not satisfied by `assignment` (indexed like `vars`).
    pub fn violated_rows(&self, assignment: &[i64]) -> Vec<&MilpRow> {
        self.rows
            .iter()
            .filter(|r| {
                let lhs: i64 = r.terms.iter().map(|&(v, c)| c * assignment[v]).sum();
                match r.sense {
                    Sense::Le => lhs > r.rhs,
                    Sense::Ge => lhs < r.rhs,
                    Sense::Eq => lhs != r.rhs,
                }
            })
            .collect()
    }

    /// LP-format text. A comment header records the model dimensions.
    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        let fam = self.family_counts();
        let _ = writeln!(
            out,
            "\\ bus evacuation orienteering: n={} vehicles={} subtours_per_vehicle={} time_windows={} big_m={}",
            self.n, self.vehicles, self.subtours, self.time_windows, self.big_m
        );
        let _ = writeln!(
            out,
            "\\ variables: x={} y={} u={} s={} total={}",
            self.count_vars("x_"),
            self.count_vars("y_"),
            self.count_vars("u_"),
            self.count_vars("s_"),
            self.vars.len()
        );
        let mut fams = String::new();
        for (f, c) in fam.iter().enumerate().skip(2) {
            let _ = write!(fams, " ({f})={c}");
        }
        let _ = writeln!(out, "\\ constraints: total={}{}", self.rows.len(), fams);
        out.push_str("Maximize\n");
        self.write_expr(&mut out, " obj:", &self.objective);
        out.push('\n');
        out.push_str("Subject To\n");
        for r in &self.rows {
            self.write_expr(&mut out, &format!(" {}:", r.name), &r.terms);
            let _ = writeln!(out, " {} {}", r.sense.symbol(), r.rhs);
        }
        out.push_str("Bounds\n");
        for v in self.vars.iter().filter(|v| !v.binary) {
            let _ = writeln!(out, " {} >= 0", v.name);
        }
        out.push_str("Binaries\n");
        let mut line = String::new();
        for v in self.vars.iter().filter(|v| v.binary) {
            if line.len() + v.name.len() > 72 {
                let _ = writeln!(out, "{line}");
                line.clear();
            }
            line.push(' ');
            line.push_str(&v.name);
        }
        if !line.is_empty() {
            let _ = writeln!(out, "{line}");
        }
        out.push_str("End\n");
        out
    }

    fn write_expr(&self, out: &mut String, label: &str, terms: &[(usize, i64)]) {
        let mut line = String::from(label);
        for (pos, &(v, c)) in terms.iter().enumerate() {
            let name = &self.vars[v].name;
            let term = match (pos, c < 0) {
                (0, false) => format!(" {c} {name}"),
                (0, true) => format!(" - {} {name}", -c),
                (_, false) => format!(" + {c} {name}"),
                (_, true) => format!(" - {} {name}", -c),
            };
            if line.len() + term.len() > 78 {
                out.push_str(&line);
                out.push('\n');
                line = String::from("  ");
            }
            line.push_str(&term);
        }
        if terms.is_empty() {
            line.push_str(" 0");
        }
        out.push_str(&line);
    }
}

/// Writes the model for `inst` with `subtours` subtours per vehicle.
pub fn emit_milp_lp(inst: &BeopInstance, subtours: usize) -> Result<String, MilpError> {
    Ok(MilpModel::build(inst, subtours)?.to_lp())
}

fn segments(sol: &Solution, model: &MilpModel) -> Result<Vec<Vec<Vec<usize>>>, MilpError> {
    if sol.tours.len() != model.vehicles {
        return Err(MilpError::FleetMismatch {
            tours: sol.tours.len(),
            vehicles: model.vehicles,
        });
    }
    sol.tours
        .iter()
        .enumerate()
        .map(|(k, tour)| {
            if !tour.is_well_formed() {
                return Err(MilpError::MalformedTour(k));
            }
            let segs: Vec<Vec<usize>> = tour.subtours().map(|s| s.to_vec()).collect();
            if segs.len() > model.subtours {
                return Err(MilpError::TooManySubtours {
                    vehicle: k,
                    used: segs.len(),
                    cap: model.subtours,
                });
            }
            Ok(segs)
        })
        .collect()
}

/// Complete variable assignment for a solution: each vehicle's
/// depot-to-depot segments fill its subtours in order, `u` holds visit
/// positions and `s` absolute arrival times.
pub fn warm_start_assignment(inst: &BeopInstance, model: &MilpModel, sol: &Solution) -> Result<Vec<i64>, MilpError> {
    let segs = segments(sol, model)?;
    let mut a = vec![0i64; model.vars.len()];
    let mut set = |name: String, value: i64| a[model.index[&name]] = value;
    for (k, vehicle) in segs.iter().enumerate() {
        let mut clock = 0i64;
        for s in 0..model.subtours {
            if model.time_windows {
                set(s_name(0, k, s), clock);
            }
            let Some(seg) = vehicle.get(s) else { continue };
            let mut prev = 0;
            for (pos, &v) in seg.iter().chain(core::iter::once(&0)).enumerate() {
                set(x_name(prev, v, k, s), 1);
                clock += inst.t(prev, v) as i64;
                if v != 0 {
                    set(y_name(v, k, s), 1);
                    set(u_name(v, k, s), pos as i64 + 1);
                    if model.time_windows {
                        set(s_name(v, k, s), clock);
                    }
                }
                prev = v;
            }
        }
    }
    Ok(a)
}

/// MIP start listing every arc and visit variable, one `name value` per line.
pub fn load_warm_start(inst: &BeopInstance, sol: &Solution, subtours: usize) -> Result<String, MilpError> {
    let model = MilpModel::build(inst, subtours)?;
    let a = warm_start_assignment(inst, &model, sol)?;
    let mut out = String::from("# MIP start\n");
    for (v, var) in model.vars.iter().enumerate() {
        if var.binary {
            let _ = writeln!(out, "{} {}", var.name, a[v]);
        }
    }
    Ok(out)
}
