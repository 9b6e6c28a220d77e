//! Random specifications and traces shared by the integration tests.
#![allow(dead_code)]

use lola_core::ast::TypedSpec;
use lola_core::compile_with_bundles;
use lola_core::value::Value;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Bool,
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    types: Vec<Ty>,
    /// Potentials bounding offsets so every cycle is negative; `None` draws
    /// offsets freely.
    potential: Option<Vec<i64>>,
    current: usize,
}

impl Gen<'_> {
    fn offset_to(&mut self, target: usize) -> Option<i64> {
        let Some(phi) = &self.potential else {
            return Some(self.rng.random_range(-3..=3));
        };
        let up = i64::from(target >= self.current);
        let hi = (phi[self.current] - phi[target] - up).min(3);
        (hi >= -3).then(|| self.rng.random_range(-3..=hi))
    }

    fn literal(&mut self, ty: Ty) -> String {
        match ty {
            Ty::Int => {
                let v: i64 = self.rng.random_range(-3..=9);
                if v < 0 {
                    format!("({v})")
                } else {
                    v.to_string()
                }
            }
            Ty::Bool => self.rng.random_bool(0.5).to_string(),
        }
    }

    fn reference(&mut self, ty: Ty, depth: u32) -> String {
        let input = match ty {
            Ty::Int => "x",
            Ty::Bool => "b",
        };
        let candidates: Vec<usize> = (0..self.types.len())
            .filter(|&i| self.types[i] == ty)
            .collect();
        if self.rng.random_bool(0.3) || candidates.is_empty() {
            let k: i64 = self.rng.random_range(-3..=3);
            return if k == 0 {
                input.to_owned()
            } else {
                let d = self.default(ty, depth);
                format!("{input}[{k}, {d}]")
            };
        }
        let target = *candidates.choose(self.rng).unwrap();
        match self.offset_to(target) {
            Some(0) if self.rng.random_bool(0.5) => format!("o{target}"),
            Some(k) => {
                let d = self.default(ty, depth);
                format!("o{target}[{k}, {d}]")
            }
            None => self.literal(ty),
        }
    }

    fn default(&mut self, ty: Ty, depth: u32) -> String {
        if depth == 0 || self.rng.random_bool(0.75) {
            self.literal(ty)
        } else {
            self.reference(ty, depth - 1)
        }
    }

    fn expr(&mut self, ty: Ty, depth: u32) -> String {
        if depth == 0 || self.rng.random_bool(0.25) {
            return if self.rng.random_bool(0.2) {
                self.literal(ty)
            } else {
                self.reference(ty, 1)
            };
        }
        let d = depth - 1;
        match ty {
            Ty::Int => match self.rng.random_range(0..7) {
                0 => format!("({} + {})", self.expr(Ty::Int, d), self.expr(Ty::Int, d)),
                1 => format!("({} - {})", self.expr(Ty::Int, d), self.expr(Ty::Int, d)),
                2 => format!("({} * {})", self.expr(Ty::Int, d), self.expr(Ty::Int, d)),
                3 => format!(
                    "({} / {})",
                    self.expr(Ty::Int, d),
                    self.rng.random_range(1..=3)
                ),
                4 => format!("toint({})", self.expr(Ty::Bool, d)),
                5 => format!("(-{})", self.expr(Ty::Int, d)),
                _ => format!(
                    "(if {} then {} else {})",
                    self.expr(Ty::Bool, d),
                    self.expr(Ty::Int, d),
                    self.expr(Ty::Int, d)
                ),
            },
            Ty::Bool => match self.rng.random_range(0..8) {
                0 => format!("({} && {})", self.expr(Ty::Bool, d), self.expr(Ty::Bool, d)),
                1 => format!("({} || {})", self.expr(Ty::Bool, d), self.expr(Ty::Bool, d)),
                2 => format!("({} -> {})", self.expr(Ty::Bool, d), self.expr(Ty::Bool, d)),
                3 => format!("(!{})", self.expr(Ty::Bool, d)),
                4 => format!("({} < {})", self.expr(Ty::Int, d), self.expr(Ty::Int, d)),
                5 => format!("({} == {})", self.expr(Ty::Int, d), self.expr(Ty::Int, d)),
                6 => format!("({} /= {})", self.expr(Ty::Bool, d), self.expr(Ty::Bool, d)),
                _ => format!(
                    "(if {} then {} else {})",
                    self.expr(Ty::Bool, d),
                    self.expr(Ty::Bool, d),
                    self.expr(Ty::Bool, d)
                ),
            },
        }
    }
}

/// Source of a random specification with inputs `int x`, `bool b` and 1 to
/// 4 outputs `o0..`, offsets within -3..3. With `monitorable`, offsets are
/// drawn so that every dependency cycle has negative weight.
pub fn random_source(rng: &mut ChaCha8Rng, monitorable: bool) -> String {
    let n = rng.random_range(1..=4);
    let types: Vec<Ty> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                Ty::Int
            } else {
                Ty::Bool
            }
        })
        .collect();
    let potential = monitorable.then(|| (0..n).map(|_| rng.random_range(0..=3)).collect());
    let mut g = Gen {
        rng,
        types: types.clone(),
        potential,
        current: 0,
    };
    let mut src = String::from("input int x\ninput bool b\n");
    for (i, ty) in types.iter().enumerate() {
        g.current = i;
        let body = g.expr(*ty, 3);
        let ty = match ty {
            Ty::Int => "int",
            Ty::Bool => "bool",
        };
        src.push_str(&format!("output {ty} o{i} = {body}\n"));
    }
    src
}

pub fn random_monitorable(seed: u64) -> (TypedSpec, String) {
    let src = random_source(&mut rng(seed), true);
    let spec = compile_with_bundles::<&str>(&src, &[]).unwrap_or_else(|e| panic!("{e}\n{src}"));
    (spec, src)
}

/// Events for the `x`/`b` inputs of [`random_source`].
pub fn random_trace(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Vec<Value>> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| {
            vec![
                Value::Int(rng.random_range(-5..=5)),
                Value::Bool(rng.random_bool(0.5)),
            ]
        })
        .collect()
}

pub fn bool_trace(rng: &mut ChaCha8Rng, len: usize, p_true: f64) -> Vec<bool> {
    (0..len).map(|_| rng.random_bool(p_true)).collect()
}

pub fn as_events(xs: &[bool]) -> Vec<Vec<Value>> {
    xs.iter().map(|&x| vec![Value::Bool(x)]).collect()
}

pub fn column(rows: &[lola_core::engine::OutputRow], name: &str) -> Vec<Value> {
    rows.iter()
        .map(|r| r.get(name).unwrap_or_else(|| panic!("no `{name}`")).clone())
        .collect()
}

pub fn bools(vs: &[Value]) -> Vec<bool> {
    vs.iter().map(|v| v.as_bool().expect("bool")).collect()
}

/// Runs the incremental engine over a whole trace.
pub fn run_engine(
    spec: &TypedSpec,
    trace: &[Vec<Value>],
    simplify: bool,
) -> Result<
    (Vec<lola_core::engine::OutputRow>, lola_core::engine::Stats),
    lola_core::engine::EngineError,
> {
    use lola_core::engine::{Engine, EngineOptions};
    let mut e = Engine::new(spec.clone(), EngineOptions { simplify })?;
    let mut rows = Vec::new();
    for ev in trace {
        rows.extend(e.push_values(ev.clone())?);
    }
    rows.extend(e.finish()?);
    Ok((rows, e.stats()))
}

/// Exact bounded semantics of `until(a, b, p, q)` at `j`: some `k` in
/// `[a, b]` has `q` at `j + k`, and `p` holds at every `j + i` for `a <= i < k`.
/// `q` outside the trace is false and `p` outside the trace is true.
pub fn until_reference(p: &[bool], q: &[bool], a: i64, b: i64, j: usize) -> bool {
    let at = |xs: &[bool], i: i64, d: bool| {
        let t = j as i64 + i;
        if t < 0 || t >= xs.len() as i64 {
            d
        } else {
            xs[t as usize]
        }
    };
    (a..=b).any(|k| at(q, k, false) && (a..k).all(|i| at(p, i, true)))
}

pub fn eventually_reference(p: &[bool], a: i64, b: i64, j: usize) -> bool {
    (a..=b).any(|k| {
        let t = j as i64 + k;
        t >= 0 && t < p.len() as i64 && p[t as usize]
    })
}
