//! Dense reference simulator for the FR protocol family.
//!
//! Shares no code with the library. Friends copy their result into a memory
//! with a permutation matrix; the outside observers are plain projectors
//! without memories. Joint probabilities come from the chain
//! `‖Π_n U_n ⋯ Π_1 U_1 ψ‖²`, with coherent friend memories read by
//! projectors appended after the last step that matters.

#![allow(dead_code)]

use std::collections::BTreeMap;

pub type Mat = Vec<Vec<f64>>;

pub const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Mixed-radix layout, first factor most significant.
#[derive(Clone, Debug)]
pub struct Layout {
    pub names: Vec<&'static str>,
    pub dims: Vec<usize>,
}

impl Layout {
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn pos(&self, name: &str) -> usize {
        self.names.iter().position(|n| *n == name).expect("known factor")
    }

    pub fn digits(&self, mut i: usize) -> Vec<usize> {
        let mut d = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            d[k] = i % self.dims[k];
            i /= self.dims[k];
        }
        d
    }

    pub fn index(&self, d: &[usize]) -> usize {
        d.iter().zip(&self.dims).fold(0, |acc, (x, n)| acc * n + x)
    }

    /// Embeds a matrix acting on `targets` (in that order) into the full space.
    pub fn embed(&self, targets: &[&str], local: &Mat) -> Mat {
        let pos: Vec<usize> = targets.iter().map(|t| self.pos(t)).collect();
        let ldims: Vec<usize> = pos.iter().map(|&p| self.dims[p]).collect();
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for j in 0..n {
            let dj = self.digits(j);
            let lc = pos.iter().zip(&ldims).fold(0, |acc, (&p, &d)| acc * d + dj[p]);
            for (lr, row) in local.iter().enumerate() {
                let a = row[lc];
                if a == 0.0 {
                    continue;
                }
                let mut di = dj.clone();
                let mut r = lr;
                for k in (0..pos.len()).rev() {
                    di[pos[k]] = r % ldims[k];
                    r /= ldims[k];
                }
                m[self.index(&di)][j] += a;
            }
        }
        m
    }
}

pub fn apply(m: &Mat, v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn norm_sqr(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn projector(v: &[f64]) -> Mat {
    v.iter().map(|a| v.iter().map(|b| a * b).collect()).collect()
}

pub fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

/// Permutation on (system, memory) swapping memory 0 with memory s + 1
/// when the system shows s. `offset` shifts which system values count, so
/// a memory can copy another memory's record labels.
pub fn copy_unitary(system_dim: usize, memory_dim: usize, offset: usize) -> Mat {
    let n = system_dim * memory_dim;
    let mut m = vec![vec![0.0; n]; n];
    for s in 0..system_dim {
        for k in 0..memory_dim {
            let target = if s < offset {
                k
            } else {
                let r = s - offset + 1;
                if k == 0 {
                    r
                } else if k == r {
                    0
                } else {
                    k
                }
            };
            m[s * memory_dim + target][s * memory_dim + k] = 1.0;
        }
    }
    m
}

#[derive(Clone, Debug)]
pub enum Op {
    Unitary(Mat),
    /// Projective measurement of `var`; `select` keeps one outcome.
    Measure {
        var: String,
        family: Vec<(String, Mat)>,
        select: Option<String>,
    },
}

/// One time step; friend copies carry a deferred readout for coherent runs.
#[derive(Clone, Debug)]
pub struct Step {
    pub op: Op,
    /// `(variable, readout family)` produced at the end when not collapsed.
    pub deferred: Option<(String, Vec<(String, Mat)>)>,
}

/// Joint distribution of every variable produced up to `horizon` steps,
/// normalized over the kept branches.
pub fn joint(psi: &[f64], steps: &[Step], horizon: usize) -> (Vec<String>, BTreeMap<Vec<String>, f64>) {
    let mut ops: Vec<Op> = steps[..horizon].iter().map(|s| s.op.clone()).collect();
    for s in &steps[..horizon] {
        if let Some((var, family)) = &s.deferred {
            ops.push(Op::Measure {
                var: var.clone(),
                family: family.clone(),
                select: None,
            });
        }
    }
    let vars: Vec<String> = ops
        .iter()
        .filter_map(|o| match o {
            Op::Measure { var, .. } => Some(var.clone()),
            _ => None,
        })
        .collect();
    let mut out = BTreeMap::new();
    let mut path = Vec::new();
    walk(psi.to_vec(), &ops, &mut path, &mut out);
    let total: f64 = out.values().sum();
    for v in out.values_mut() {
        *v /= total;
    }
    (vars, out)
}

fn walk(v: Vec<f64>, ops: &[Op], path: &mut Vec<String>, out: &mut BTreeMap<Vec<String>, f64>) {
    let Some((op, rest)) = ops.split_first() else {
        *out.entry(path.clone()).or_default() += norm_sqr(&v);
        return;
    };
    match op {
        Op::Unitary(m) => walk(apply(m, &v), rest, path, out),
        Op::Measure { family, select, .. } => {
            for (label, p) in family {
                if select.as_ref().is_some_and(|s| s != label) {
                    continue;
                }
                let w = apply(p, &v);
                if norm_sqr(&w) < 1e-30 {
                    continue;
                }
                path.push(label.clone());
                walk(w, rest, path, out);
                path.pop();
            }
        }
    }
}

/// Marginal onto `keep`, in that order.
pub fn marginal(
    vars: &[String],
    table: &BTreeMap<Vec<String>, f64>,
    keep: &[&str],
) -> BTreeMap<Vec<String>, f64> {
    let idx: Vec<usize> = keep
        .iter()
        .map(|k| vars.iter().position(|v| v == k).expect("variable in joint"))
        .collect();
    let mut out = BTreeMap::new();
    for (k, p) in table {
        let key: Vec<String> = idx.iter().map(|&i| k[i].clone()).collect();
        *out.entry(key).or_default() += p;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    FbarFWbarW,
    FWbarFbar,
    FbarFWWbar,
}

#[derive(Clone, Debug)]
pub struct FrSetup {
    pub order: Order,
    pub collapse: Vec<&'static str>,
    pub select: Vec<(&'static str, &'static str)>,
    pub hidden: bool,
}

impl Default for FrSetup {
    fn default() -> Self {
        FrSetup {
            order: Order::FbarFWbarW,
            collapse: vec![],
            select: vec![],
            hidden: false,
        }
    }
}

/// Layout, initial vector and steps of a configuration. Memories are
/// `{blank, r1, r2}`; `coin = {heads, tails}`, `spin = {down, up}`.
pub fn fr_model(setup: &FrSetup) -> (Layout, Vec<f64>, Vec<Step>) {
    let mut names = vec!["coin", "Fbar", "spin", "F"];
    let mut dims = vec![2, 3, 2, 3];
    if setup.hidden {
        names.push("Gbar");
        dims.push(3);
    }
    let layout = Layout { names, dims };
    let n = layout.dim();
    let mut psi = vec![0.0; n];
    let mut d = vec![0; layout.dims.len()];
    psi[layout.index(&d)] = (1.0f64 / 3.0).sqrt();
    d[0] = 1;
    psi[layout.index(&d)] = (2.0f64 / 3.0).sqrt();

    let memory_reads = |who: &str, labels: [&str; 2]| -> Vec<(String, Mat)> {
        (0..2)
            .map(|k| {
                let p = projector(&unit(3, k + 1));
                (labels[k].to_string(), layout.embed(&[who], &p))
            })
            .collect()
    };
    let collapse = |who: &str| setup.collapse.contains(&who);
    let select = |who: &str| {
        setup
            .select
            .iter()
            .find(|(w, _)| *w == who)
            .map(|(_, v)| v.to_string())
    };
    let friend = |who: &'static str, system: &'static str, labels: [&str; 2]| -> Vec<Step> {
        let u = layout.embed(&[system, who], &copy_unitary(2, 3, 0));
        let read = memory_reads(who, labels);
        if collapse(who) {
            vec![
                Step {
                    op: Op::Unitary(u),
                    deferred: None,
                },
                Step {
                    op: Op::Measure {
                        var: who.into(),
                        family: read,
                        select: select(who),
                    },
                    deferred: None,
                },
            ]
        } else {
            vec![Step {
                op: Op::Unitary(u),
                deferred: Some((who.into(), read)),
            }]
        }
    };
    // transverse preparation under control label `tails`
    let send = |control: &str, tails_digit: usize, control_dim: usize| -> Step {
        let mut local = vec![vec![0.0; control_dim * 2]; control_dim * 2];
        for c in 0..control_dim {
            let r = if c == tails_digit {
                vec![vec![H, H], vec![H, -H]]
            } else {
                vec![vec![1.0, 0.0], vec![0.0, 1.0]]
            };
            for i in 0..2 {
                for j in 0..2 {
                    local[c * 2 + i][c * 2 + j] = r[i][j];
                }
            }
        }
        Step {
            op: Op::Unitary(layout.embed(&[control, "spin"], &local)),
            deferred: None,
        }
    };
    let observer = |who: &str, targets: [&str; 2], a: usize, b: usize, labels: [&str; 2]| -> Step {
        let mut minus = vec![0.0; 6];
        minus[a] = H;
        minus[b] = -H;
        let mut plus = vec![0.0; 6];
        plus[a] = H;
        plus[b] = H;
        Step {
            op: Op::Measure {
                var: who.into(),
                family: vec![
                    (labels[0].into(), layout.embed(&targets, &projector(&minus))),
                    (labels[1].into(), layout.embed(&targets, &projector(&plus))),
                ],
                select: select(who),
            },
            deferred: None,
        }
    };
    // (coin, Fbar) local index = coin * 3 + memory; (spin, F) likewise
    let wbar = observer("Wbar", ["coin", "Fbar"], 1, 5, ["okbar", "failbar"]);
    let wbar_blank = observer("Wbar", ["coin", "Fbar"], 0, 3, ["okbar", "failbar"]);
    let w = observer("W", ["spin", "F"], 1, 5, ["ok", "fail"]);
    let gbar = || -> Vec<Step> {
        if !setup.hidden {
            return vec![];
        }
        let u = layout.embed(&["Fbar", "Gbar"], &copy_unitary(3, 3, 1));
        vec![Step {
            op: Op::Unitary(u),
            deferred: Some(("Gbar".into(), memory_reads("Gbar", ["heads", "tails"]))),
        }]
    };

    let mut steps = Vec::new();
    match setup.order {
        Order::FbarFWbarW | Order::FbarFWWbar => {
            steps.extend(friend("Fbar", "coin", ["heads", "tails"]));
            steps.extend(gbar());
            steps.push(send("Fbar", 2, 3));
            steps.extend(friend("F", "spin", ["down", "up"]));
            if setup.order == Order::FbarFWbarW {
                steps.push(wbar);
                steps.push(w);
            } else {
                steps.push(w);
                steps.push(wbar);
            }
        }
        Order::FWbarFbar => {
            steps.push(send("coin", 1, 2));
            steps.extend(friend("F", "spin", ["down", "up"]));
            steps.push(wbar_blank);
            steps.extend(friend("Fbar", "coin", ["heads", "tails"]));
            steps.extend(gbar());
            steps.push(w);
        }
    }
    (layout, psi, steps)
}

/// Number of steps up to and including the last one producing any of `vars`.
pub fn horizon(steps: &[Step], vars: &[&str]) -> usize {
    let produces = |s: &Step, v: &str| match (&s.op, &s.deferred) {
        (Op::Measure { var, .. }, _) if var == v => true,
        (_, Some((var, _))) => var == v,
        _ => false,
    };
    steps
        .iter()
        .rposition(|s| vars.iter().any(|v| produces(s, v)))
        .map_or(0, |i| i + 1)
}

/// Joint of `vars` on the run cut at their horizon.
pub fn fr_joint(setup: &FrSetup, vars: &[&str]) -> BTreeMap<Vec<String>, f64> {
    let (_, psi, steps) = fr_model(setup);
    let h = horizon(&steps, vars);
    let (all, table) = joint(&psi, &steps, h);
    marginal(&all, &table, vars)
}

/// `P(event | condition)` from an oracle joint keyed by `vars`.
pub fn conditional(
    table: &BTreeMap<Vec<String>, f64>,
    vars: &[&str],
    event: &[(&str, &str)],
    condition: &[(&str, &str)],
) -> f64 {
    let matches = |k: &Vec<String>, atoms: &[(&str, &str)]| {
        atoms.iter().all(|(v, x)| {
            let i = vars.iter().position(|w| w == v).expect("variable");
            k[i] == *x
        })
    };
    let pc: f64 = table.iter().filter(|(k, _)| matches(k, condition)).map(|(_, p)| p).sum();
    let pe: f64 = table
        .iter()
        .filter(|(k, _)| matches(k, condition) && matches(k, event))
        .map(|(_, p)| p)
        .sum();
    pe / pc
}
