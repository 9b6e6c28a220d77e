//! Template libraries shipped with the engine, and the experiment specs built
//! on them.

use crate::frontend::surface::{Item, Template};
use crate::frontend::{parse_spec, SurfaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Library {
    pub name: &'static str,
    pub source: &'static str,
    /// Libraries whose templates this one instantiates.
    pub depends: &'static [&'static str],
}

pub const CATALOG: &[Library] = &[
    Library {
        name: "ltl_past",
        source: include_str!("../lib/ltl_past.lola"),
        depends: &[],
    },
    Library {
        name: "mtl",
        source: include_str!("../lib/mtl.lola"),
        depends: &[],
    },
    Library {
        name: "mtltl",
        source: include_str!("../lib/mtltl.lola"),
        depends: &["mtl"],
    },
    Library {
        name: "utils",
        source: include_str!("../lib/utils.lola"),
        depends: &[],
    },
    Library {
        name: "experiments",
        source: include_str!("../lib/experiments.lola"),
        depends: &[],
    },
];

pub fn library(name: &str) -> Option<&'static Library> {
    CATALOG.iter().find(|l| l.name == name)
}

/// The named libraries plus their dependencies, dependencies first, each
/// once. `all` selects the whole catalog. Returns the unknown name on error.
pub fn resolve_bundles<'n>(
    names: impl IntoIterator<Item = &'n str>,
) -> Result<Vec<&'static Library>, String> {
    fn add(lib: &'static Library, out: &mut Vec<&'static Library>) {
        if out.iter().any(|l| l.name == lib.name) {
            return;
        }
        for dep in lib.depends {
            add(library(dep).expect("catalog dependencies exist"), out);
        }
        out.push(lib);
    }
    let mut out = Vec::new();
    for name in names {
        if name == "all" {
            CATALOG.iter().for_each(|l| add(l, &mut out));
        } else {
            add(library(name).ok_or_else(|| name.to_owned())?, &mut out);
        }
    }
    Ok(out)
}

fn templates_of(name: &str) -> Vec<Template> {
    let lib = library(name).expect("catalog entry");
    let spec: SurfaceSpec = parse_spec(lib.source).expect("shipped libraries parse");
    spec.items
        .into_iter()
        .filter_map(|i| match i {
            Item::Template(t) => Some(t),
            _ => None,
        })
        .collect()
}

/// `once`, `historically`, `yesterday`, `since`.
pub fn ltl_past_templates() -> Vec<Template> {
    templates_of("ltl_past")
}

/// `until`, `eventually`, `always` over offset intervals.
pub fn mtl_templates() -> Vec<Template> {
    templates_of("mtl")
}

/// `mt_eventually`, `mt_until`, `mt_always` over `[0, m]`.
pub fn mtltl_templates() -> Vec<Template> {
    templates_of("mtltl")
}

/// `nsum`.
pub fn utils_templates() -> Vec<Template> {
    templates_of("utils")
}

/// Period checkers and their carrier chains.
pub fn experiment_templates() -> Vec<Template> {
    templates_of("experiments")
}

/// A complete specification: its source and the bundles it needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub name: String,
    pub source: String,
    pub bundles: Vec<&'static str>,
}

impl Example {
    fn new(name: impl Into<String>, source: String, bundles: &[&'static str]) -> Example {
        Example {
            name: name.into(),
            source,
            bundles: bundles.to_vec(),
        }
    }
}

pub fn nsum_spec(n: u32) -> Example {
    Example::new(
        format!("nsum({n})"),
        format!("input int s\noutput int sum = nsum(s, {n})\n"),
        &["utils"],
    )
}

pub fn boolean_period_width(n: u32) -> Example {
    let src = format!("input bool p\noutput bool periodic_width = booleanPeriodWidth({n})\n");
    Example::new(format!("booleanPeriodWidth({n})"), src, &["experiments"])
}

pub fn boolean_period_height(n: u32) -> Example {
    let src = format!("input bool p\noutput bool periodic_height = booleanPeriodHeight({n})\n");
    Example::new(format!("booleanPeriodHeight({n})"), src, &["experiments"])
}

pub fn smooth_period_width(n: u32) -> Example {
    let src = format!("input bool p\noutput int smooth_period_width = smoothPeriodWidth({n})\n");
    Example::new(format!("smoothPeriodWidth({n})"), src, &["experiments"])
}

pub fn smooth_period_height(n: u32) -> Example {
    let src = format!("input bool p\noutput int smooth_period_height = smoothPeriodHeight({n})\n");
    Example::new(format!("smoothPeriodHeight({n})"), src, &["experiments"])
}

/// An alarm must be followed by an all-clear within 10 instants, or else by
/// a shutdown exactly 10 instants later.
pub fn alarm_prop() -> Example {
    let src = "input bool alarm\ninput bool allclear\ninput bool shutdown\n\
               output bool prop = alarm -> (eventually(0, 10, allclear) || eventually(10, 10, shutdown))\n";
    Example::new("alarm_prop", src.to_owned(), &["mtl"])
}

/// The sender may only wait for an acknowledgement if it never waited before.
pub fn sender_prop() -> Example {
    let src = "data SndrState = Get | Send | WaitForAck\n\
               input SndrState senderState\n\
               output bool sndrNotWaiting = senderState /= WaitForAck\n\
               output bool prop = senderState == WaitForAck -> yesterday(historically(sndrNotWaiting))\n";
    Example::new("sender_prop", src.to_owned(), &["ltl_past"])
}

/// Every experiment at a representative parameter.
pub fn experiment_specs() -> Vec<Example> {
    vec![
        nsum_spec(5),
        boolean_period_width(3),
        boolean_period_height(3),
        smooth_period_width(3),
        smooth_period_height(3),
        alarm_prop(),
        sender_prop(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analyze;
    use crate::engine::oracle_evaluate;
    use crate::value::Value;
    use crate::{compile_example, compile_with_bundles};

    fn col(ex_src: &str, bundles: &[&str], trace: Vec<Vec<Value>>, name: &str) -> Vec<Value> {
        let spec = compile_with_bundles(ex_src, bundles).unwrap();
        oracle_evaluate(&spec, &trace)
            .unwrap()
            .iter()
            .map(|r| r.get(name).unwrap().clone())
            .collect()
    }

    fn b(xs: &[u8]) -> Vec<Vec<Value>> {
        xs.iter().map(|&x| vec![Value::Bool(x == 1)]).collect()
    }

    fn bv(xs: &[u8]) -> Vec<Value> {
        xs.iter().map(|&x| Value::Bool(x == 1)).collect()
    }

    #[test]
    fn catalog_names_and_templates() {
        let names: Vec<_> = ltl_past_templates().into_iter().map(|t| t.name).collect();
        assert_eq!(names, ["once", "historically", "yesterday", "since"]);
        let names: Vec<_> = mtl_templates().into_iter().map(|t| t.name).collect();
        assert_eq!(names, ["until", "eventually", "always"]);
        assert_eq!(mtltl_templates().len(), 3);
        assert_eq!(utils_templates().len(), 1);
        assert!(experiment_templates()
            .iter()
            .any(|t| t.name == "carrier_prd"));
        let all: Vec<_> = resolve_bundles(["all"])
            .unwrap()
            .iter()
            .map(|l| l.name)
            .collect();
        assert_eq!(all, ["ltl_past", "mtl", "mtltl", "utils", "experiments"]);
        let deps: Vec<_> = resolve_bundles(["mtltl"])
            .unwrap()
            .iter()
            .map(|l| l.name)
            .collect();
        assert_eq!(deps, ["mtl", "mtltl"]);
        assert_eq!(resolve_bundles(["nope"]), Err("nope".to_owned()));
    }

    #[test]
    fn every_example_compiles_and_is_well_defined() {
        for ex in experiment_specs() {
            let spec = compile_example(&ex).unwrap_or_else(|e| panic!("{}: {e}", ex.name));
            let a = analyze(&spec).unwrap_or_else(|e| panic!("{}: {e}", ex.name));
            assert!(a.efficiently_monitorable, "{}", ex.name);
        }
    }

    const PQ: &str = "input bool p\ninput bool q\n";

    fn pq(p: &[u8], q: &[u8]) -> Vec<Vec<Value>> {
        p.iter()
            .zip(q)
            .map(|(&p, &q)| vec![Value::Bool(p == 1), Value::Bool(q == 1)])
            .collect()
    }

    #[test]
    fn past_ltl_examples() {
        let src = format!("{PQ}output bool o = since(p, q)");
        assert_eq!(
            col(&src, &["ltl_past"], pq(&[1, 1, 1], &[0, 1, 0]), "o"),
            bv(&[0, 1, 1])
        );
        let src = "input bool p\noutput bool o = yesterday(p)";
        assert_eq!(col(src, &["ltl_past"], b(&[1, 0]), "o"), bv(&[0, 1]));
        let src = "input bool p\noutput bool o = historically(p)";
        assert_eq!(
            col(src, &["ltl_past"], b(&[1, 1, 0, 1]), "o"),
            bv(&[1, 1, 0, 0])
        );
        let src = "input bool p\noutput bool o = once(p)";
        assert_eq!(col(src, &["ltl_past"], b(&[0, 1, 0]), "o"), bv(&[0, 1, 1]));
    }

    #[test]
    fn mtl_examples() {
        let src = format!("{PQ}output bool o = until(0, 2, p, q)");
        assert_eq!(
            col(&src, &["mtl"], pq(&[1, 1, 0], &[0, 0, 1]), "o")[0],
            Value::Bool(true)
        );
        let src =
            "input bool p\noutput bool a = eventually(10, 10, p)\noutput bool b = p[10, false]";
        let spec = compile_with_bundles(src, &["mtl"]).unwrap();
        assert_eq!(
            spec.decl("a").unwrap().body(),
            spec.decl("b").unwrap().body()
        );
        let src = "input bool p\noutput bool o = eventually(0, 2, p)";
        assert_eq!(col(src, &["mtl"], b(&[0, 0, 0]), "o"), bv(&[0, 0, 0]));
        assert!(compile_with_bundles(
            "input bool p\noutput bool o = eventually(3, 1, p)",
            &["mtl"]
        )
        .is_err());
    }

    #[test]
    fn mission_time_examples() {
        let src = "input bool p\noutput bool a = mt_eventually(0, p)\noutput bool b = p";
        let spec = compile_with_bundles(src, &["mtltl"]).unwrap();
        assert_eq!(
            spec.decl("a").unwrap().body().unwrap().to_string(),
            "p[0, false]"
        );
        let src = "input bool p\noutput bool o = mt_eventually(2, p)";
        assert_eq!(col(src, &["mtltl"], b(&[0, 0, 1]), "o"), bv(&[1, 1, 1]));
        let src = "input bool p\noutput bool o = mt_always(1, p)";
        assert_eq!(col(src, &["mtltl"], b(&[1, 1, 0]), "o"), bv(&[1, 0, 0]));
        assert!(
            compile_with_bundles("input bool p\noutput bool o = mt_always(-1, p)", &["mtltl"])
                .is_err()
        );
    }

    #[test]
    fn experiment_examples() {
        let ex = boolean_period_width(2);
        assert_eq!(
            col(&ex.source, &ex.bundles, b(&[1, 0, 1, 0]), "periodic_width"),
            bv(&[1, 1, 1, 1])
        );
        let ex = smooth_period_width(2);
        assert_eq!(
            col(
                &ex.source,
                &ex.bundles,
                b(&[1, 0, 1, 1]),
                "smooth_period_width"
            )[3],
            Value::Int(50)
        );
        let ex = nsum_spec(3);
        let ints = |xs: &[i64]| xs.iter().map(|&x| vec![Value::Int(x)]).collect::<Vec<_>>();
        let sums: Vec<_> = col(&ex.source, &ex.bundles, ints(&[1, 2, 3, 4]), "sum");
        assert_eq!(sums, [1, 3, 6, 9].map(Value::Int));
    }

    #[test]
    fn sender_examples() {
        let ex = sender_prop();
        let spec = compile_example(&ex).unwrap();
        let ty = spec.decl("senderState").unwrap().ty().clone();
        let crate::value::ValueType::Enum(e) = ty else {
            panic!()
        };
        let ev = |v: &str| {
            vec![Value::Enum(
                crate::value::EnumValue::new(e.clone(), v).unwrap(),
            )]
        };
        let run = |t: &[&str]| {
            let trace: Vec<_> = t.iter().map(|v| ev(v)).collect();
            oracle_evaluate(&spec, &trace)
                .unwrap()
                .iter()
                .map(|r| r.get("prop").unwrap().clone())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(&["Get", "Send", "WaitForAck"]), bv(&[1, 1, 1]));
        assert_eq!(run(&["WaitForAck", "Get", "WaitForAck"]), bv(&[0, 1, 0]));
    }

    #[test]
    fn analysis_values() {
        let bounds = |src: &str, bundles: &[&str]| {
            let a = analyze(&compile_with_bundles(src, bundles).unwrap()).unwrap();
            (a.min_back_ref, a.max_latency)
        };
        assert_eq!(bounds(&nsum_spec(5).source, &["utils"]), (-5, 0));
        assert_eq!(
            bounds(&format!("{PQ}output bool u = until(-1, 1, p, q)"), &["mtl"]),
            (-1, 1)
        );
        assert_eq!(
            bounds(&smooth_period_width(10).source, &["experiments"]),
            (-12, 0)
        );
        assert_eq!(
            bounds(&boolean_period_height(10).source, &["experiments"]),
            (-1, 0)
        );
    }
}
